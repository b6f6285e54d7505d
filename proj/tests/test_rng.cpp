#include <cmath>

#include "doctest.h"
#include "zippca/rng.hpp"

using namespace zippca;

TEST_CASE("same seed gives the same stream") {
  Rng a(42), b(42);
  for (int t = 0; t < 100; ++t) {
    CHECK(a.uniform() == b.uniform());
    CHECK(a.normal() == b.normal());
    CHECK(a.gamma(0.7) == b.gamma(0.7));
  }
}

TEST_CASE("sampler moments") {
  Rng rng(3);
  const int draws = 200000;
  double su = 0, sn = 0, sn2 = 0, sg = 0, sb = 0;
  for (int t = 0; t < draws; ++t) {
    su += rng.uniform();
    const double z = rng.normal();
    sn += z;
    sn2 += z * z;
    sg += rng.gamma(2.5);
    sb += rng.beta(2.0, 3.0);
  }
  CHECK(su / draws == doctest::Approx(0.5).epsilon(0.01));
  CHECK(std::abs(sn / draws) < 0.01);
  CHECK(sn2 / draws == doctest::Approx(1.0).epsilon(0.02));
  CHECK(sg / draws == doctest::Approx(2.5).epsilon(0.02));
  CHECK(sb / draws == doctest::Approx(0.4).epsilon(0.02));
}

TEST_CASE("multinomial draws keep the total and respect zeros") {
  Rng rng(9);
  Eigen::VectorXd probs(4);
  probs << 0.5, 0.0, 0.3, 0.2;
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(4);
  for (int t = 0; t < 2000; ++t) {
    const Eigen::VectorXd x = rng.multinomial(100, probs);
    CHECK(x.sum() == 100.0);
    CHECK(x(1) == 0.0);
    acc += x;
  }
  CHECK(acc(0) / 200000.0 == doctest::Approx(0.5).epsilon(0.02));
}

#include "zippca/io.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace zippca {

namespace {

std::vector<std::string> split(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string field;
  for (char c : line) {
    if (c == delim) {
      out.push_back(field);
      field.clear();
    } else {
      field.push_back(c);
    }
  }
  out.push_back(field);
  return out;
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\"");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\"");
  return s.substr(first, last - first + 1);
}

bool blank(const std::string& line) { return line.find_first_not_of(" \t\r") == std::string::npos; }

}  // namespace

LabeledCounts parse_count_table(std::istream& in, char delimiter, const std::string& source) {
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  LabeledCounts table;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line)) continue;
    if (!have_header) {
      if (delimiter == 0) delimiter = line.find('\t') != std::string::npos ? '\t' : ',';
      const auto fields = split(line, delimiter);
      if (fields.size() < 2) throw ParseError(source, line_no, 0, "header needs at least one taxon column");
      for (std::size_t c = 1; c < fields.size(); ++c) table.taxon_ids.push_back(trim(fields[c]));
      have_header = true;
      continue;
    }
    const auto fields = split(line, delimiter);
    if (fields.size() != table.taxon_ids.size() + 1) {
      std::ostringstream os;
      os << "expected " << table.taxon_ids.size() + 1 << " fields, found " << fields.size();
      throw ParseError(source, line_no, 0, os.str());
    }
    table.sample_ids.push_back(trim(fields[0]));
    std::vector<double> row;
    row.reserve(fields.size() - 1);
    for (std::size_t c = 1; c < fields.size(); ++c) {
      const std::string cell = trim(fields[c]);
      if (cell.empty()) throw ParseError(source, line_no, c + 1, "empty cell");
      errno = 0;
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str() || *end != '\0' || errno == ERANGE)
        throw ParseError(source, line_no, c + 1, "not a number: '" + cell + "'");
      if (v < 0.0) throw ParseError(source, line_no, c + 1, "negative count: " + cell);
      if (v != std::floor(v) || v > 9.007199254740992e15)
        throw ParseError(source, line_no, c + 1, "not an integer count: " + cell);
      row.push_back(v);
    }
    rows.push_back(std::move(row));
  }
  if (!have_header) throw ParseError(source, line_no, 0, "empty input");
  if (rows.empty()) throw ParseError(source, line_no, 0, "no sample rows");
  MatrixXd x(static_cast<Index>(rows.size()), static_cast<Index>(table.taxon_ids.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) x(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
  table.counts = CountMatrix(std::move(x));
  return table;
}

LabeledCounts read_count_table(const std::string& path, char delimiter) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, 0, 0, "cannot open file");
  return parse_count_table(in, delimiter, path);
}

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

void write_text_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << contents;
  if (!out) throw std::runtime_error("write failed for " + path);
}

void write_matrix_csv(const std::string& path, const std::string& corner,
                      const std::vector<std::string>& row_ids, const std::vector<std::string>& col_ids,
                      const MatrixXd& values) {
  if (static_cast<Index>(row_ids.size()) != values.rows() || static_cast<Index>(col_ids.size()) != values.cols())
    throw ValidationError("write_matrix_csv: label count does not match the matrix");
  std::ostringstream os;
  os << corner;
  for (const auto& c : col_ids) os << ',' << c;
  os << '\n';
  for (Index i = 0; i < values.rows(); ++i) {
    os << row_ids[static_cast<std::size_t>(i)];
    for (Index j = 0; j < values.cols(); ++j) os << ',' << format_number(values(i, j));
    os << '\n';
  }
  write_text_file(path, os.str());
}

void write_count_table(const std::string& path, const LabeledCounts& table) {
  write_matrix_csv(path, "sample", table.sample_ids, table.taxon_ids, table.counts.counts());
}

std::vector<std::string> numbered_ids(const std::string& prefix, Index count) {
  std::vector<std::string> out;
  out.reserve(static_cast<std::size_t>(count));
  for (Index a = 1; a <= count; ++a) out.push_back(prefix + std::to_string(a));
  return out;
}

}  // namespace zippca

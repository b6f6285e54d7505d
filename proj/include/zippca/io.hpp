#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "zippca/core_model.hpp"

namespace zippca {

/// Count table with its row and column identifiers.
///
/// Text layout: the first row holds a corner label followed by taxon
/// identifiers; every following row holds a sample identifier followed by
/// one nonnegative integer per taxon. Fields are separated by commas or
/// tabs. Blank lines are skipped.
struct LabeledCounts {
  CountMatrix counts;
  std::vector<std::string> sample_ids;
  std::vector<std::string> taxon_ids;
};

// delimiter 0 means detect from the header line (tab if present, else comma).
// Throws ParseError with the offending line and field.
LabeledCounts parse_count_table(std::istream& in, char delimiter = 0, const std::string& source = "<input>");
LabeledCounts read_count_table(const std::string& path, char delimiter = 0);

void write_count_table(const std::string& path, const LabeledCounts& table);

// "%.10g"
std::string format_number(double v);

// Header "corner,col_1,...", then one labeled row per matrix row.
void write_matrix_csv(const std::string& path, const std::string& corner,
                      const std::vector<std::string>& row_ids, const std::vector<std::string>& col_ids,
                      const MatrixXd& values);

// Writes the whole file at once; throws std::runtime_error on I/O failure.
void write_text_file(const std::string& path, const std::string& contents);

// Default identifiers: prefix followed by 1-based position.
std::vector<std::string> numbered_ids(const std::string& prefix, Index count);

}  // namespace zippca

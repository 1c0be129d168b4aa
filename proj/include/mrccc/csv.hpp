#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mrccc/model.hpp"

namespace mrccc {

/// Parsed CSV with a mandatory header row. `line_numbers[i]` is the 1-based
/// source line of rows[i].
struct CsvTable {
  std::string source;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;

  /// Column index by name, or std::nullopt.
  std::optional<std::size_t> column(const std::string& name) const;
};

/// Throws DataError on ragged rows or a missing header. Blank lines are
/// skipped; fields may be double-quoted.
CsvTable parse_csv(std::istream& in, const std::string& source);
CsvTable read_csv(const std::filesystem::path& path);

/// Parses a numeric cell; DataError names file, line and column on failure.
double parse_cell(const CsvTable& t, std::size_t row, std::size_t col);

/// Shortest-safe round-trip representation (17 significant digits).
std::string format_double(double v);

void write_csv_row(std::ostream& out, const std::vector<std::string>& fields);

/// Dataset file: header `donor,g1..gpG,h1..hpH,v1..vpV,x,z,y`.
void write_dataset_csv(const std::filesystem::path& path, const Dataset& d,
                       const std::vector<std::string>& donors = {});
Dataset read_dataset_csv(const std::filesystem::path& path,
                         std::vector<std::string>* donors = nullptr);

/// Truth sidecar: rows `parameter,value`.
void write_truth_csv(const std::filesystem::path& path,
                     const StructuralParams& p);

}  // namespace mrccc

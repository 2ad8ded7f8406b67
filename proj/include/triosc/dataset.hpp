#pragma once

// Tabular output: rectangular numeric datasets with '#'-prefixed provenance
// headers, written as CSV. Reruns with identical inputs produce
// byte-identical files (no timestamps in the header).

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace triosc {

inline constexpr const char* kVersion = "0.1.0";

struct DatasetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Dataset {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  std::vector<std::string> provenance;  // free-form header lines
  std::string units_note;

  void add_row(std::initializer_list<double> vals) {
    if (vals.size() != columns.size())
      throw DatasetError("Dataset: row width does not match the columns");
    rows.emplace_back(vals);
  }
  void add_row(const std::vector<double>& vals) {
    if (vals.size() != columns.size())
      throw DatasetError("Dataset: row width does not match the columns");
    rows.push_back(vals);
  }
};

inline std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

inline void write_csv(const Dataset& ds, const std::filesystem::path& path) {
  std::filesystem::create_directories(path.parent_path().empty()
                                          ? "."
                                          : path.parent_path());
  std::ofstream out(path);
  if (!out) throw DatasetError("write_csv: cannot open " + path.string());
  out << "# triosc " << kVersion << "\n";
  for (const auto& line : ds.provenance) out << "# " << line << "\n";
  if (!ds.units_note.empty()) out << "# units: " << ds.units_note << "\n";
  for (size_t i = 0; i < ds.columns.size(); ++i)
    out << ds.columns[i] << (i + 1 < ds.columns.size() ? "," : "\n");
  for (const auto& row : ds.rows) {
    for (size_t i = 0; i < row.size(); ++i)
      out << format_number(row[i]) << (i + 1 < row.size() ? "," : "\n");
  }
  if (!out) throw DatasetError("write_csv: write failed for " + path.string());
}

}  // namespace triosc

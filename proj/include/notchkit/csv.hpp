#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace notchkit {

// Shortest round-trip decimal form (std::to_chars), so values written to
// CSV parse back to the identical double.
std::string fmt_double(double v);

double parse_double(const std::string& s);
long parse_long(const std::string& s);

struct CsvTable {
  std::vector<std::string> comments;  // leading '#' lines, marker stripped
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
};

// Writes comment lines ("# ..."), a header row, then data rows. The file is
// written to a temporary sibling and renamed into place so readers never see
// a partial file.
void write_csv_atomic(const std::filesystem::path& path,
                      const std::vector<std::string>& comments,
                      const std::vector<std::string>& columns,
                      const std::vector<std::vector<std::string>>& rows);

// Reads a CSV produced by this project (no quoting or embedded commas).
CsvTable read_csv(const std::filesystem::path& path);

}  // namespace notchkit

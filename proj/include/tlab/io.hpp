#pragma once

#include <string>
#include <vector>

namespace tlab {

/// Shortest round-trip decimal rendering; locale independent.
std::string fmt_num(double v);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> columns;
};

/// Reads a comma-separated numeric table and checks the header matches `expected`.
CsvTable read_csv(const std::string& path, const std::vector<std::string>& expected);

}  // namespace tlab

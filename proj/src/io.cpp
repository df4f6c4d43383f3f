#include "tlab/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "tlab/error.hpp"

namespace tlab {

std::string fmt_num(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
    out.push_back(cell);
  }
  return out;
}

}  // namespace

CsvTable read_csv(const std::string& path, const std::vector<std::string>& expected) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, "cannot open file");
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw ConfigError(path, "empty file");
  t.header = split(line);
  if (t.header != expected) {
    std::string want;
    for (const auto& h : expected) want += (want.empty() ? "" : ",") + h;
    throw ConfigError(path, "expected header `" + want + "`");
  }
  t.columns.assign(expected.size(), {});
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    auto cells = split(line);
    if (cells.size() != expected.size())
      throw ConfigError(path, "row " + std::to_string(row) + " has wrong column count");
    for (std::size_t c = 0; c < cells.size(); ++c) {
      double v = 0;
      auto [ptr, ec] = std::from_chars(cells[c].data(), cells[c].data() + cells[c].size(), v);
      if (ec != std::errc() || ptr != cells[c].data() + cells[c].size())
        throw ConfigError(path, "row " + std::to_string(row) + ": not a number `" + cells[c] + "`");
      t.columns[c].push_back(v);
    }
  }
  return t;
}

}  // namespace tlab

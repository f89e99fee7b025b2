#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

namespace psgdlab {

std::string fmt_num(double v);  // 17 significant digits
std::string fmt_num(std::uint64_t v);
std::string fmt_bool(bool v);

// Header row on construction, then one call per row. Rows must match the
// header width.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, std::vector<std::string> header);

  void row(const std::vector<std::string>& cells);

 private:
  std::ofstream out_;
  std::size_t width_;
};

}  // namespace psgdlab

#include "psgdlab/csv.hpp"

#include <cmath>
#include <sstream>

#include "psgdlab/errors.hpp"

namespace psgdlab {

std::string fmt_num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}

std::string fmt_num(std::uint64_t v) { return std::to_string(v); }

std::string fmt_bool(bool v) { return v ? "1" : "0"; }

CsvWriter::CsvWriter(const std::string& path, std::vector<std::string> header)
    : out_(path), width_(header.size()) {
  if (!out_) throw ValidationError("cannot write '" + path + "'");
  row(header);
}

void CsvWriter::row(const std::vector<std::string>& cells) {
  if (cells.size() != width_) throw std::logic_error("csv row width does not match header");
  for (std::size_t k = 0; k < cells.size(); ++k) out_ << (k ? "," : "") << cells[k];
  out_ << '\n';
}

}  // namespace psgdlab

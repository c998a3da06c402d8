#pragma once

// Minimal CSV output with round-trippable number formatting.

#include <charconv>
#include <cstddef>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace bdmf {

/// Locale-free rendering with 17 significant digits.
inline std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path) : out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw std::runtime_error("cannot open '" + path + "' for writing");
  }

  void header(std::span<const std::string> cols) { write_row(cols); }

  void write_row(std::span<const std::string> cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ << ',';
      out_ << cells[i];
    }
    out_ << '\n';
  }

  void write_numbers(std::span<const double> values) {
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (i) out_ << ',';
      out_ << format_number(values[i]);
    }
    out_ << '\n';
  }

  void flush() { out_.flush(); }

 private:
  std::ofstream out_;
};

/// prefix + first, ..., prefix + last, e.g. "y_1".."y_M".
inline std::vector<std::string> indexed_columns(std::string_view prefix, std::size_t first, std::size_t last) {
  std::vector<std::string> cols;
  for (std::size_t i = first; i <= last; ++i) cols.push_back(std::string(prefix) + std::to_string(i));
  return cols;
}

}  // namespace bdmf

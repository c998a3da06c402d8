#pragma once

// Run files: flat key = value lines grouped into [experiment] blocks, one run
// per block. Comments start with '#' or ';'. Every key can also be supplied as
// a command-line flag, which takes precedence over the file.

#include <charconv>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "bdmf/experiment.hpp"

namespace bdmf {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::size_t line, std::string key, const std::string& what)
      : std::runtime_error(describe(line, key, what)), line_(line), key_(std::move(key)) {}

  [[nodiscard]] std::size_t line() const { return line_; }
  [[nodiscard]] const std::string& key() const { return key_; }

 private:
  static std::string describe(std::size_t line, const std::string& key, const std::string& what) {
    std::string s;
    if (line) s += "line " + std::to_string(line) + ": ";
    if (!key.empty()) s += "key '" + key + "': ";
    return s + what;
  }
  std::size_t line_;
  std::string key_;
};

struct RunEntry {
  std::string value;
  std::size_t line = 0;
};

struct RunBlock {
  std::size_t line = 0;
  std::map<std::string, RunEntry> entries;
};

namespace detail {
inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::string canonical_key(std::string_view key) {
  std::string k(key);
  for (char& c : k)
    if (c == '-') c = '_';
  return k;
}
}  // namespace detail

inline std::vector<RunBlock> parse_run_text(std::string_view text) {
  std::vector<RunBlock> blocks;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    const auto raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    auto line = detail::trim(raw);
    if (line.empty() || line.front() == '#' || line.front() == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(line_no, "", "unterminated section header");
      const auto name = detail::trim(line.substr(1, line.size() - 2));
      if (name != "experiment") {
        throw ConfigError(line_no, "", "unknown section '" + std::string(name) + "' (expected [experiment])");
      }
      blocks.push_back(RunBlock{line_no, {}});
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(line_no, "", "expected 'key = value'");
    const auto key = detail::canonical_key(detail::trim(line.substr(0, eq)));
    const auto value = detail::trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(line_no, "", "empty key");
    if (blocks.empty()) throw ConfigError(line_no, key, "key appears before any [experiment] block");
    auto& entries = blocks.back().entries;
    if (entries.contains(key)) throw ConfigError(line_no, key, "duplicate key in block");
    entries.emplace(key, RunEntry{std::string(value), line_no});
  }
  return blocks;
}

inline std::vector<RunBlock> parse_run_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(0, "", "cannot open run file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_run_text(ss.str());
}

/// Fully resolved parameters of one run.
struct RunSettings {
  std::string name;
  ModelConfig model;
  std::size_t N = 50;
  std::vector<std::size_t> N_list{50, 100, 200, 400, 800};
  double x0 = 0.2;
  double t0 = 5.0;
  /// True once t0 came from a file or flag; commands with a shorter natural
  /// horizon fall back to their own default otherwise.
  bool t0_given = false;
  double grid = 0.01;
  double tol = 1e-10;
  std::size_t M = 10;
  double r = 0.5;
  std::size_t runs = 10000;
  std::uint64_t seed = 1;
  Closure closure = Closure::PowerOfFirst;
  std::vector<std::string> functions{"identity", "square", "sin", "constant"};
};

namespace detail {

inline double parse_double(const std::string& key, const std::string& v, std::size_t line) {
  double out = 0.0;
  const char* b = v.data();
  const char* e = v.data() + v.size();
  if (!v.empty() && *b == '+') ++b;
  const auto res = std::from_chars(b, e, out);
  if (res.ec != std::errc{} || res.ptr != e) throw ConfigError(line, key, "expected a number, got '" + v + "'");
  return out;
}

inline std::uint64_t parse_unsigned(const std::string& key, const std::string& v, std::size_t line) {
  std::uint64_t out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc{} || res.ptr != v.data() + v.size()) {
    throw ConfigError(line, key, "expected a nonnegative integer, got '" + v + "'");
  }
  return out;
}

/// "[a, b, c]", "a,b,c" or "a b c".
inline std::vector<std::string> split_list(std::string_view v) {
  v = trim(v);
  if (!v.empty() && v.front() == '[') {
    v.remove_prefix(1);
    if (!v.empty() && v.back() == ']') v.remove_suffix(1);
  }
  std::vector<std::string> items;
  std::string cur;
  for (char c : v) {
    if (c == ',' || c == ' ' || c == '\t') {
      if (!cur.empty()) items.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) items.push_back(cur);
  return items;
}

}  // namespace detail

/// Applies one key to the settings. Unknown keys and unparsable values raise
/// ConfigError with the given line (0 for command-line flags).
inline void apply_setting(RunSettings& s, const std::string& raw_key, const std::string& v, std::size_t line = 0) {
  using namespace detail;
  const std::string key = canonical_key(raw_key);
  auto num = [&] { return parse_double(key, v, line); };
  auto uint = [&] { return parse_unsigned(key, v, line); };
  auto positive = [&](double x) {
    if (!(x > 0.0)) throw ConfigError(line, key, "must be positive");
    return x;
  };

  if (key == "name") s.name = v;
  else if (key == "model") {
    if (v != "sis" && v != "rlad" && v != "poly") throw ConfigError(line, key, "expected sis, rlad or poly");
    s.model.model = v;
  } else if (key == "N") {
    s.N = uint();
    if (s.N < 1) throw ConfigError(line, key, "must be at least 1");
  } else if (key == "N_list") {
    s.N_list.clear();
    for (const auto& item : split_list(v)) {
      const auto n = parse_unsigned(key, item, line);
      if (n < 1) throw ConfigError(line, key, "every N must be at least 1");
      s.N_list.push_back(n);
    }
    if (s.N_list.empty()) throw ConfigError(line, key, "empty list");
  } else if (key == "beta") s.model.beta = num();
  else if (key == "gamma") s.model.gamma = num();
  else if (key == "alpha") s.model.alpha = num();
  else if (key == "omega") s.model.omega = num();
  else if (key == "kappa") s.model.kappa = positive(num());
  else if (key == "k1max") s.model.k1max = positive(num());
  else if (key == "g" || key == "h") {
    std::vector<double> coeffs;
    for (const auto& item : split_list(v)) coeffs.push_back(parse_double(key, item, line));
    if (coeffs.empty()) throw ConfigError(line, key, "empty coefficient list");
    (key == "g" ? s.model.g : s.model.h) = std::move(coeffs);
  } else if (key == "x0") s.x0 = num();
  else if (key == "t0") {
    s.t0 = positive(num());
    s.t0_given = true;
  }
  else if (key == "grid") s.grid = positive(num());
  else if (key == "tol") s.tol = positive(num());
  else if (key == "M") {
    s.M = uint();
    if (s.M < 1) throw ConfigError(line, key, "must be at least 1");
  } else if (key == "r") {
    s.r = num();
    if (!(s.r > 0.0 && s.r < 1.0)) throw ConfigError(line, key, "must lie in (0, 1)");
  } else if (key == "runs") s.runs = uint();
  else if (key == "seed") s.seed = uint();
  else if (key == "closure") {
    if (v == "power_of_first") s.closure = Closure::PowerOfFirst;
    else if (v == "freeze_last") s.closure = Closure::FreezeLast;
    else throw ConfigError(line, key, "expected power_of_first or freeze_last");
  } else if (key == "functions") {
    s.functions = split_list(v);
    for (const auto& f : s.functions) {
      if (f != "identity" && f != "square" && f != "sin" && f != "constant") {
        throw ConfigError(line, key, "unknown test function '" + f + "'");
      }
    }
  } else {
    throw ConfigError(line, key, "unknown key");
  }
}

inline void apply_block(RunSettings& s, const RunBlock& block) {
  for (const auto& [key, entry] : block.entries) apply_setting(s, key, entry.value, entry.line);
}

}  // namespace bdmf

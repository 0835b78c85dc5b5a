#pragma once

// Flat `key = value` configuration text. Blank lines and `#` comments are
// ignored; keys are unique.

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "chgat/error.hpp"

namespace chgat {

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace config_detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace config_detail

class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::string_view text) {
    KeyValueConfig kv;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      const auto t = config_detail::trim(line);
      if (t.empty() || t.front() == '#') continue;
      const auto eq = t.find('=');
      if (eq == std::string::npos) throw ParseError(line_no, "expected key = value");
      const auto key = config_detail::trim(std::string_view(t).substr(0, eq));
      const auto value = config_detail::trim(std::string_view(t).substr(eq + 1));
      if (key.empty()) throw ParseError(line_no, "empty key");
      if (!kv.values_.emplace(key, value).second) throw ParseError(line_no, "duplicate key " + key);
    }
    return kv;
  }

  static KeyValueConfig load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FileMissing(path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
  }

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  bool has(const std::string& key) const { return values_.count(key) != 0; }

  const std::string& get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw InvalidArgument("missing config key " + key);
    return it->second;
  }

  std::size_t get_size(const std::string& key) const {
    const auto& v = get(key);
    char* end = nullptr;
    errno = 0;
    const auto n = std::strtoull(v.c_str(), &end, 10);
    if (v.empty() || *end != '\0' || errno != 0 || v.front() == '-') {
      throw InvalidArgument("config key " + key + " must be a non-negative integer, got '" + v + "'");
    }
    return static_cast<std::size_t>(n);
  }

  double get_double(const std::string& key) const { return to_double(key, get(key)); }

  bool get_bool(const std::string& key) const {
    const auto& v = get(key);
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw InvalidArgument("config key " + key + " must be true/false, got '" + v + "'");
  }

  /// Comma-separated doubles.
  std::vector<double> get_doubles(const std::string& key) const {
    std::vector<double> out;
    std::stringstream ss(get(key));
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(to_double(key, config_detail::trim(item)));
    return out;
  }

  /// Keys present here but absent from `known`.
  std::vector<std::string> unknown_keys(const std::set<std::string>& known) const {
    std::vector<std::string> out;
    for (const auto& [k, _] : values_) {
      if (!known.count(k)) out.push_back(k);
    }
    return out;
  }

  /// Canonical text: sorted keys, one `key = value` per line.
  std::string to_text() const {
    std::string out;
    for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
    return out;
  }

  const std::map<std::string, std::string>& values() const noexcept { return values_; }

 private:
  static double to_double(const std::string& key, const std::string& v) {
    char* end = nullptr;
    const double d = std::strtod(v.c_str(), &end);
    if (v.empty() || *end != '\0') throw InvalidArgument("config key " + key + " must be a number, got '" + v + "'");
    return d;
  }

  std::map<std::string, std::string> values_;
};

}  // namespace chgat

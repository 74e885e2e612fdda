#pragma once

// Flat `key = value` configuration files. `#` starts a comment.

#include <algorithm>
#include <fstream>
#include <initializer_list>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "separapde/error.hpp"

namespace separapde {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

class Config {
 public:
  Config() = default;

  static Config parse(std::istream& in, const std::string& name = "config") {
    Config c;
    std::string line;
    for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
      if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      const std::string t = trim(line);
      if (t.empty()) continue;
      const auto eq = t.find('=');
      const std::string where = name + ":" + std::to_string(lineno);
      if (eq == std::string::npos) fail(ErrorCode::parse_error, where + ": expected 'key = value'");
      const std::string key = trim(std::string_view(t).substr(0, eq));
      const std::string value = trim(std::string_view(t).substr(eq + 1));
      if (key.empty()) fail(ErrorCode::parse_error, where + ": empty key");
      if (!c.values_.emplace(key, value).second) fail(ErrorCode::parse_error, where + ": duplicate key '" + key + "'");
    }
    return c;
  }

  static Config load(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::usage, "cannot open config file '" + path + "'");
    return parse(in, path);
  }

  void set(const std::string& key, std::string value) { values_[key] = std::move(value); }
  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::optional<std::string> get(const std::string& key) const {
    if (auto it = values_.find(key); it != values_.end()) return it->second;
    return std::nullopt;
  }
  std::string get_or(const std::string& key, std::string fallback) const { return get(key).value_or(std::move(fallback)); }

  double get_double(const std::string& key, double fallback) const {
    const auto v = get(key);
    if (!v) return fallback;
    try {
      std::size_t pos = 0;
      const double x = std::stod(*v, &pos);
      if (pos == v->size()) return x;
    } catch (const std::exception&) {
    }
    fail(ErrorCode::parse_error, "'" + key + "' must be a number, got '" + *v + "'");
  }

  unsigned long long get_uint(const std::string& key, unsigned long long fallback) const {
    const auto v = get(key);
    if (!v) return fallback;
    if (!v->empty() && v->find_first_not_of("0123456789") == std::string::npos) {
      try {
        return std::stoull(*v);
      } catch (const std::exception&) {
      }
    }
    fail(ErrorCode::parse_error, "'" + key + "' must be a non-negative integer, got '" + *v + "'");
  }

  bool get_bool(const std::string& key, bool fallback) const {
    const auto v = get(key);
    if (!v) return fallback;
    if (*v == "true" || *v == "1" || *v == "yes") return true;
    if (*v == "false" || *v == "0" || *v == "no") return false;
    fail(ErrorCode::parse_error, "'" + key + "' must be true or false, got '" + *v + "'");
  }

  void reject_unknown(std::initializer_list<std::string_view> allowed) const {
    for (const auto& [k, v] : values_)
      if (std::find(allowed.begin(), allowed.end(), k) == allowed.end())
        fail(ErrorCode::usage, "unknown key '" + k + "'");
  }

  void require(std::initializer_list<std::string_view> keys) const {
    for (auto k : keys)
      if (!has(std::string(k))) fail(ErrorCode::usage, "missing required key '" + std::string(k) + "'");
  }

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

/// Comma-separated list; entries "a-b" expand to the inclusive range.
inline std::vector<std::size_t> parse_size_list(std::string_view s) {
  std::vector<std::size_t> out;
  auto number = [&](const std::string& t) -> std::size_t {
    if (t.empty() || t.find_first_not_of("0123456789") != std::string::npos)
      fail(ErrorCode::parse_error, "bad list entry '" + t + "' in '" + std::string(s) + "'");
    return static_cast<std::size_t>(std::stoull(t));
  };
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto comma = std::min(s.find(',', start), s.size());
    const std::string item = trim(s.substr(start, comma - start));
    if (const auto dash = item.find('-'); dash != std::string::npos) {
      const auto a = number(trim(std::string_view(item).substr(0, dash)));
      const auto b = number(trim(std::string_view(item).substr(dash + 1)));
      if (b < a) fail(ErrorCode::parse_error, "empty range '" + item + "'");
      for (auto k = a; k <= b; ++k) out.push_back(k);
    } else {
      out.push_back(number(item));
    }
    start = comma + 1;
  }
  return out;
}

/// Comma-separated words, whitespace trimmed.
inline std::vector<std::string> parse_word_list(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto comma = std::min(s.find(',', start), s.size());
    std::string item = trim(s.substr(start, comma - start));
    if (!item.empty()) out.push_back(std::move(item));
    start = comma + 1;
  }
  return out;
}

}  // namespace separapde

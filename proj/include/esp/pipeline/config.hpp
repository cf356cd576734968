#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace esp::pipeline {

/// Flat `key = value` configuration. '#' starts a comment. A comma-separated
/// value is a list of alternatives; expand_grid() enumerates them.
class Config {
 public:
  static Config parse(const std::string& text);
  static Config load(const std::string& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  void set(const std::string& key, const std::string& value);

  std::string get(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  long long get_int(const std::string& key, long long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  /// Alternatives for a key (a single element for plain values).
  std::vector<std::string> alternatives(const std::string& key) const;
  bool is_grid() const;

  /// Canonical text: one `key = value` line per key, sorted by key.
  std::string to_string() const;
  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

/// Cartesian product over every list-valued key, in key order.
std::vector<Config> expand_grid(const Config& config);

}  // namespace esp::pipeline

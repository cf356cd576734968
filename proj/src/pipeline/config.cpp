#include "esp/pipeline/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "esp/common/error.hpp"

namespace esp::pipeline {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_commas(const std::string& v) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(v);
  while (std::getline(in, cur, ',')) out.push_back(trim(cur));
  if (out.empty()) out.push_back("");
  return out;
}

}  // namespace

Config Config::parse(const std::string& text) {
  Config c;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::BadConfig, "expected 'key = value'", lineno);
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw Error(ErrorCode::BadConfig, "empty key", lineno);
    c.values_[key] = trim(line.substr(eq + 1));
  }
  return c;
}

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

void Config::set(const std::string& key, const std::string& value) { values_[key] = value; }

std::string Config::get(const std::string& key, const std::string& fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  if (it->second.find(',') != std::string::npos)
    throw Error(ErrorCode::BadConfig, "key '" + key + "' holds a list; expand the grid first");
  return it->second;
}

double Config::get_double(const std::string& key, double fallback) const {
  if (!has(key)) return fallback;
  const std::string v = get(key, "");
  double out = 0;
  auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size())
    throw Error(ErrorCode::BadConfig, "key '" + key + "' is not a number: " + v);
  return out;
}

long long Config::get_int(const std::string& key, long long fallback) const {
  if (!has(key)) return fallback;
  const std::string v = get(key, "");
  long long out = 0;
  auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size())
    throw Error(ErrorCode::BadConfig, "key '" + key + "' is not an integer: " + v);
  return out;
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const std::string v = get(key, "");
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw Error(ErrorCode::BadConfig, "key '" + key + "' is not a boolean: " + v);
}

std::vector<std::string> Config::alternatives(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) return {};
  return split_commas(it->second);
}

bool Config::is_grid() const {
  for (const auto& [k, v] : values_)
    if (v.find(',') != std::string::npos) return true;
  return false;
}

std::string Config::to_string() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
  return out;
}

std::vector<Config> expand_grid(const Config& config) {
  std::vector<Config> out = {Config{}};
  for (const auto& [key, value] : config.values()) {
    const auto alts = config.alternatives(key);
    std::vector<Config> next;
    for (const auto& partial : out)
      for (const auto& a : alts) {
        Config c = partial;
        c.set(key, a);
        next.push_back(std::move(c));
      }
    out = std::move(next);
  }
  return out;
}

}  // namespace esp::pipeline

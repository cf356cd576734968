#include "esp/spectra/msp.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "esp/common/error.hpp"

namespace esp::spectra {

namespace {

std::string normalize_key(const std::string& key) {
  std::string out;
  for (char c : key) {
    if (c == ' ' || c == '_' || c == '\t') continue;
    out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

bool parse_double(const std::string& s, double& out) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto res = std::from_chars(first, last, out);
  return res.ec == std::errc() && res.ptr == last;
}

bool is_blank(const std::string& s) { return trim(s).empty(); }

std::string format5(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.5f", v);
  return buf;
}

}  // namespace

std::optional<std::string> MspRecord::find(const std::string& key) const {
  const std::string k = normalize_key(key);
  for (const auto& [mk, mv] : metadata)
    if (normalize_key(mk) == k) return mv;
  return std::nullopt;
}

double MspRecord::collision_energy_value() const {
  const std::string& s = collision_energy;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (std::isdigit(static_cast<unsigned char>(s[i])) ||
        (s[i] == '.' && i + 1 < s.size() && std::isdigit(static_cast<unsigned char>(s[i + 1])))) {
      double v = 0.0;
      auto res = std::from_chars(s.data() + i, s.data() + s.size(), v);
      if (res.ec == std::errc()) return v;
    }
  }
  return std::numeric_limits<double>::quiet_NaN();
}

InstrumentSetting MspRecord::instrument() const {
  double ce = collision_energy_value();
  return InstrumentSetting::from_raw(precursor_type, std::isnan(ce) ? 0.0 : ce);
}

std::vector<MspRecord> parse_msp(std::istream& in) {
  std::vector<MspRecord> records;
  std::string line;
  std::size_t lineno = 0;
  std::optional<MspRecord> cur;
  bool have_name = false;

  auto finish = [&](std::size_t at) {
    if (!cur) return;
    if (!have_name) throw Error(ErrorCode::MalformedRecord, "record without Name", at);
    throw Error(ErrorCode::MalformedRecord, "record '" + cur->name + "' has no Num Peaks", at);
  };

  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (is_blank(line)) {
      if (cur) finish(lineno);
      continue;
    }
    const auto colon = line.find(':');
    if (colon == std::string::npos) {
      throw Error(ErrorCode::MalformedRecord, "expected 'Key: value' header", lineno);
    }
    if (!cur) {
      cur.emplace();
      have_name = false;
    }
    const std::string raw_key = trim(line.substr(0, colon));
    const std::string value = trim(line.substr(colon + 1));
    const std::string key = normalize_key(raw_key);

    if (key == "name") {
      cur->name = value;
      have_name = true;
    } else if (key == "precursormz") {
      double v;
      if (!parse_double(value, v))
        throw Error(ErrorCode::MalformedRecord, "bad PrecursorMZ '" + value + "'", lineno);
      cur->precursor_mz = v;
    } else if (key == "precursortype") {
      cur->precursor_type = value;
    } else if (key == "collisionenergy") {
      cur->collision_energy = value;
    } else if (key == "numpeaks") {
      long declared = -1;
      {
        auto res = std::from_chars(value.data(), value.data() + value.size(), declared);
        if (res.ec != std::errc() || res.ptr != value.data() + value.size() || declared < 0)
          throw Error(ErrorCode::MalformedRecord, "bad Num Peaks '" + value + "'", lineno);
      }
      if (!have_name) throw Error(ErrorCode::MalformedRecord, "record without Name", lineno);
      const std::size_t header_line = lineno;
      long parsed = 0;
      // Peak lines run until a blank line or end of input.
      while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (is_blank(line)) break;
        std::istringstream ls(line);
        std::string mz_s, in_s;
        ls >> mz_s >> in_s;
        double mz, inten;
        if (mz_s.empty() || in_s.empty() || !parse_double(mz_s, mz) || !parse_double(in_s, inten))
          throw Error(ErrorCode::MalformedPeakLine, "cannot read peak from '" + line + "'", lineno);
        cur->peaks.push_back({mz, inten});
        ++parsed;
      }
      if (parsed != declared)
        throw Error(ErrorCode::PeakCountMismatch,
                    "record '" + cur->name + "' declares " + std::to_string(declared) +
                        " peaks but has " + std::to_string(parsed),
                    header_line);
      records.push_back(std::move(*cur));
      cur.reset();
    } else {
      cur->metadata.emplace_back(raw_key, value);
    }
  }
  if (cur) finish(lineno);
  return records;
}

std::vector<MspRecord> parse_msp_text(const std::string& text) {
  std::istringstream in(text);
  return parse_msp(in);
}

void render_msp(std::ostream& out, const std::vector<MspRecord>& records) {
  bool first = true;
  for (const auto& r : records) {
    if (!first) out << '\n';
    first = false;
    out << "Name: " << r.name << '\n';
    if (r.precursor_mz) out << "PrecursorMZ: " << format5(*r.precursor_mz) << '\n';
    if (!r.precursor_type.empty()) out << "Precursor_type: " << r.precursor_type << '\n';
    if (!r.collision_energy.empty()) out << "Collision_energy: " << r.collision_energy << '\n';
    for (const auto& [k, v] : r.metadata) out << k << ": " << v << '\n';
    out << "Num Peaks: " << r.peaks.size() << '\n';
    for (const auto& p : r.peaks) out << format5(p.mz) << ' ' << format5(p.intensity) << '\n';
  }
}

std::string render_msp_text(const std::vector<MspRecord>& records) {
  std::ostringstream os;
  render_msp(os, records);
  return os.str();
}

}  // namespace esp::spectra

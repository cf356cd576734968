#include "esp/spectra/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include "esp/common/error.hpp"

namespace esp::spectra {

namespace {

constexpr double kCollisionEnergyScale = 100.0;

struct Adduct {
  const char* name;
  double delta;  // added to the neutral mass
};

// Proton 1.007276, water 18.010565, ammonia 17.026549, sodium cation 22.989218.
constexpr Adduct kAdducts[] = {
    {"[M+H]+", 1.00727646688},
    {"[M+H-H2O]+", 1.00727646688 - 18.0105646863},
    {"[M+H-2H2O]+", 1.00727646688 - 2 * 18.0105646863},
    {"[M+H-NH3]+", 1.00727646688 - 17.0265491015},
    {"[M+Na]+", 22.9892207},
};

}  // namespace

const std::vector<std::string>& InstrumentSetting::precursor_vocabulary() {
  static const std::vector<std::string> vocab = [] {
    std::vector<std::string> v;
    for (const auto& a : kAdducts) v.emplace_back(a.name);
    v.emplace_back("OTHER");
    return v;
  }();
  return vocab;
}

InstrumentSetting InstrumentSetting::from_raw(const std::string& precursor_type,
                                              double raw_collision_energy) {
  InstrumentSetting s;
  s.precursor_type_ = precursor_type.empty() ? "[M+H]+" : precursor_type;
  double e = std::isfinite(raw_collision_energy) ? raw_collision_energy / kCollisionEnergyScale : 0.0;
  s.collision_energy_ = std::clamp(e, 0.0, 1.0);
  return s;
}

InstrumentSetting InstrumentSetting::from_normalized(const std::string& precursor_type,
                                                     double collision_energy) {
  InstrumentSetting s = from_raw(precursor_type, 0.0);
  s.collision_energy_ = std::isfinite(collision_energy) ? std::clamp(collision_energy, 0.0, 1.0) : 0.0;
  return s;
}

std::size_t InstrumentSetting::precursor_index() const {
  const auto& v = precursor_vocabulary();
  for (std::size_t i = 0; i + 1 < v.size(); ++i)
    if (v[i] == precursor_type_) return i;
  return v.size() - 1;
}

std::size_t InstrumentSetting::feature_size() { return precursor_vocabulary().size() + 1; }

std::vector<double> InstrumentSetting::features() const {
  std::vector<double> f(feature_size(), 0.0);
  f[precursor_index()] = 1.0;
  f.back() = collision_energy_;
  return f;
}

std::string InstrumentSetting::key() const {
  std::ostringstream os;
  os << precursor_type_ << '@' << std::setprecision(17) << collision_energy_;
  return os.str();
}

double precursor_mz(double neutral_mass, const std::string& precursor_type) {
  for (const auto& a : kAdducts)
    if (precursor_type == a.name) return neutral_mass + a.delta;
  return neutral_mass + kAdducts[0].delta;
}

double BinnedSpectrum::max_intensity() const {
  double m = 0.0;
  for (double v : intensities) m = std::max(m, v);
  return m;
}

double BinnedSpectrum::sum() const {
  double s = 0.0;
  for (double v : intensities) s += v;
  return s;
}

bool BinnedSpectrum::is_zero() const {
  return std::all_of(intensities.begin(), intensities.end(), [](double v) { return v == 0.0; });
}

BinnedSpectrum bin_peaks(std::span<const Peak> peaks, std::size_t bins, BinningStats* stats) {
  if (bins == 0) throw Error(ErrorCode::InvalidArgument, "bin count must be positive");
  BinnedSpectrum out;
  out.intensities.assign(bins, 0.0);
  std::size_t dropped = 0;
  for (const auto& p : peaks) {
    if (!(p.intensity >= 0.0))
      throw Error(ErrorCode::NegativeIntensity,
                  "negative intensity at m/z " + std::to_string(p.mz));
    if (!(p.mz >= 0.0))
      throw Error(ErrorCode::InvalidArgument, "negative m/z " + std::to_string(p.mz));
    const double idx = std::floor(p.mz);
    if (idx >= static_cast<double>(bins)) {
      ++dropped;
      continue;
    }
    out.intensities[static_cast<std::size_t>(idx)] += p.intensity;
  }
  if (stats) stats->dropped = dropped;
  return out;
}

BinnedSpectrum sqrt_intensities(const BinnedSpectrum& s) {
  BinnedSpectrum out = s;
  for (double& v : out.intensities) v = std::sqrt(v);
  return out;
}

BinnedSpectrum l2_normalize(const BinnedSpectrum& s, bool* was_zero) {
  double ss = 0.0;
  for (double v : s.intensities) ss += v * v;
  if (was_zero) *was_zero = ss == 0.0;
  BinnedSpectrum out = s;
  if (ss == 0.0) return out;
  const double norm = std::sqrt(ss);
  for (double& v : out.intensities) v /= norm;
  return out;
}

double cosine_similarity(std::span<const double> a, std::span<const double> b, bool* zero_vector) {
  if (a.size() != b.size())
    throw Error(ErrorCode::DimensionMismatch, "spectrum lengths differ: " +
                                                  std::to_string(a.size()) + " vs " +
                                                  std::to_string(b.size()));
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const bool zero = na == 0.0 || nb == 0.0;
  if (zero_vector) *zero_vector = zero;
  if (zero) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

double cosine_similarity(const BinnedSpectrum& a, const BinnedSpectrum& b, bool* zero_vector) {
  return cosine_similarity(a.intensities, b.intensities, zero_vector);
}

int PeakDocument::total_count() const {
  int t = 0;
  for (const auto& [w, c] : counts) t += c;
  return t;
}

PeakDocument to_peak_document(const BinnedSpectrum& s, int quantization) {
  if (quantization <= 0) throw Error(ErrorCode::InvalidArgument, "quantization must be positive");
  PeakDocument doc;
  const double mx = s.max_intensity();
  if (mx <= 0.0) return doc;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double v = s.intensities[i];
    if (v <= 0.0) continue;
    const int c = static_cast<int>(std::round(v / mx * quantization));
    if (c > 0) doc.counts[i] = c;
  }
  return doc;
}

void write_spectrum_tsv(std::ostream& out, const BinnedSpectrum& s) {
  out << "#P=" << s.size() << '\n';
  out << std::setprecision(17);
  for (std::size_t i = 0; i < s.size(); ++i)
    if (s.intensities[i] != 0.0) out << i << '\t' << s.intensities[i] << '\n';
}

BinnedSpectrum read_spectrum_tsv(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  BinnedSpectrum s;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line.rfind("#P=", 0) == 0) {
      s.intensities.assign(std::stoul(line.substr(3)), 0.0);
      have_header = true;
      continue;
    }
    if (line[0] == '#') continue;
    if (!have_header) throw Error(ErrorCode::MalformedRecord, "missing #P= header", lineno);
    std::istringstream ls(line);
    std::size_t bin;
    double v;
    if (!(ls >> bin >> v) || bin >= s.size())
      throw Error(ErrorCode::MalformedRecord, "bad spectrum row '" + line + "'", lineno);
    s.intensities[bin] = v;
  }
  if (!have_header) throw Error(ErrorCode::MalformedRecord, "missing #P= header", lineno);
  return s;
}

}  // namespace esp::spectra

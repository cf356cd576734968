#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace esp::spectra {

inline constexpr std::size_t kDefaultBins = 1000;

/// Precursor adduct one-hot plus normalised collision energy.
class InstrumentSetting {
 public:
  InstrumentSetting() = default;

  /// `raw_collision_energy` is on the NCE scale; it is divided by 100 and
  /// clamped to [0, 1]. Unknown precursor types map to the OTHER slot.
  static InstrumentSetting from_raw(const std::string& precursor_type, double raw_collision_energy);
  /// Energy already on [0, 1]; out-of-range values are clamped.
  static InstrumentSetting from_normalized(const std::string& precursor_type, double collision_energy);

  const std::string& precursor_type() const { return precursor_type_; }
  double collision_energy() const { return collision_energy_; }
  std::size_t precursor_index() const;

  /// One-hot over precursor_vocabulary() followed by the energy.
  std::vector<double> features() const;
  static std::size_t feature_size();

  /// Vocabulary of positive-mode adducts; the last entry is "OTHER".
  static const std::vector<std::string>& precursor_vocabulary();

  /// Stable key used for caching predictions.
  std::string key() const;

  bool operator==(const InstrumentSetting&) const = default;

 private:
  std::string precursor_type_ = "[M+H]+";
  double collision_energy_ = 0.0;
};

/// m/z of the precursor ion for a neutral monoisotopic mass.
double precursor_mz(double neutral_mass, const std::string& precursor_type);

struct Peak {
  double mz;
  double intensity;
};

/// Intensities over 1-Da bins [i, i+1), i = 0..P-1.
struct BinnedSpectrum {
  std::vector<double> intensities;
  double bin_width = 1.0;
  double precursor_mz = 0.0;
  InstrumentSetting instrument;

  std::size_t size() const { return intensities.size(); }
  double max_intensity() const;
  double sum() const;
  bool is_zero() const;
};

struct BinningStats {
  std::size_t dropped = 0;  // peaks with mz >= P
};

/// floor(mz) binning with same-bin summation. Throws NegativeIntensity for a
/// negative intensity and InvalidArgument for a negative m/z.
BinnedSpectrum bin_peaks(std::span<const Peak> peaks, std::size_t bins = kDefaultBins,
                         BinningStats* stats = nullptr);

/// Elementwise square root of intensities (optional intensity transform).
BinnedSpectrum sqrt_intensities(const BinnedSpectrum& s);

/// Unit L2 norm; an all-zero spectrum is returned unchanged and `was_zero`
/// is set.
BinnedSpectrum l2_normalize(const BinnedSpectrum& s, bool* was_zero = nullptr);

/// a.b / (|a||b|); 0 with `zero_vector` set when either norm is 0. Lengths
/// must match.
double cosine_similarity(std::span<const double> a, std::span<const double> b,
                         bool* zero_vector = nullptr);
double cosine_similarity(const BinnedSpectrum& a, const BinnedSpectrum& b,
                         bool* zero_vector = nullptr);

/// Bag of peaks: word id = bin index.
struct PeakDocument {
  std::map<std::size_t, int> counts;

  int total_count() const;
  bool empty() const { return counts.empty(); }
};

/// count(bin) = round(intensity / max * quantization), half away from zero;
/// zero counts are omitted.
PeakDocument to_peak_document(const BinnedSpectrum& s, int quantization);

/// `#P=<P>` header then `bin_index<TAB>intensity` for every nonzero bin.
void write_spectrum_tsv(std::ostream& out, const BinnedSpectrum& s);
BinnedSpectrum read_spectrum_tsv(std::istream& in);

}  // namespace esp::spectra

#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "esp/spectra/spectrum.hpp"

namespace esp::spectra {

struct MspRecord {
  std::string name;
  std::optional<double> precursor_mz;
  std::string precursor_type;
  std::string collision_energy;  // raw text, e.g. "35" or "NCE=35%"
  std::vector<Peak> peaks;
  /// Header keys other than the ones above, in file order.
  std::vector<std::pair<std::string, std::string>> metadata;

  /// First metadata value under `key` (case-insensitive), if any.
  std::optional<std::string> find(const std::string& key) const;

  /// First number in the collision-energy text, NaN when absent.
  double collision_energy_value() const;

  InstrumentSetting instrument() const;
};

/// Reads blank-line separated records: `Name:`, optional `PrecursorMZ:`,
/// `Precursor_type:`, `Collision_energy:`, then `Num Peaks: n` followed by n
/// `mz intensity` lines. Header keys are matched ignoring case, spaces and
/// underscores.
///
/// Throws PeakCountMismatch when the declared count differs from the peak
/// lines present, MalformedPeakLine for an unparsable peak line, and
/// MalformedRecord for structural problems; offsets are 1-based line numbers.
std::vector<MspRecord> parse_msp(std::istream& in);
std::vector<MspRecord> parse_msp_text(const std::string& text);

/// Writes records so that parse_msp reads them back; numeric values use five
/// decimal places.
void render_msp(std::ostream& out, const std::vector<MspRecord>& records);
std::string render_msp_text(const std::vector<MspRecord>& records);

}  // namespace esp::spectra

#pragma once

#include <optional>
#include <span>
#include <string_view>

namespace esp::chem {

struct ElementInfo {
  std::string_view symbol;
  int atomic_number;
  double monoisotopic_mass;  // most abundant isotope, Da
};

/// Lookup by exact (case-sensitive) symbol.
const ElementInfo* find_element(std::string_view symbol);

/// Exact mass of a specific isotope; falls back to the mass number when the
/// isotope is not tabulated.
double isotope_mass(std::string_view symbol, int mass_number);

/// Default valences for the SMILES organic subset, ascending. Empty for
/// elements outside that subset.
std::span<const int> default_valences(std::string_view symbol);

bool in_organic_subset(std::string_view symbol);

/// Elements that may be written lowercase (aromatic) in SMILES.
bool aromatic_capable(std::string_view symbol);

inline constexpr double kHydrogenMass = 1.00782503207;
inline constexpr double kProtonMass = 1.00727646688;

}  // namespace esp::chem

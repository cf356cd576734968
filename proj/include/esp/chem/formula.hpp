#pragma once

#include <map>
#include <string>
#include <string_view>

#include "esp/chem/molecule.hpp"

namespace esp::chem {

/// Element counts including hydrogens. Only elements with count >= 1 are
/// stored.
class Formula {
 public:
  Formula() = default;

  void add(const std::string& element, int count = 1);
  int count(const std::string& element) const;
  const std::map<std::string, int>& counts() const { return counts_; }
  bool empty() const { return counts_.empty(); }

  /// Hill order: C, then H, then the rest alphabetically. Formulas without
  /// carbon are fully alphabetical.
  std::string to_string() const;

  /// Parses Hill-style text such as "C6H12O6" or "ClH". Throws
  /// InvalidArgument on malformed text or unknown elements.
  static Formula parse(std::string_view text);

  bool operator==(const Formula&) const = default;

 private:
  std::map<std::string, int> counts_;
};

Formula molecular_formula(const Molecule& m);

/// Sum of most-abundant-isotope masses, isotope labels honoured. Throws
/// EmptyMolecule for a molecule without atoms.
double monoisotopic_mass(const Molecule& m);

}  // namespace esp::chem

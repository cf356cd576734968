#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "esp/chem/molecule.hpp"

namespace esp::chem {

/// Fixed-length bit vector; length is a power of two.
class Fingerprint {
 public:
  Fingerprint() = default;
  Fingerprint(std::size_t nbits, int radius);

  std::size_t size() const { return nbits_; }
  int radius() const { return radius_; }

  void set(std::size_t bit);
  bool test(std::size_t bit) const;
  std::size_t count() const;
  std::vector<std::size_t> on_bits() const;
  const std::vector<std::uint64_t>& words() const { return words_; }

  bool operator==(const Fingerprint&) const = default;

 private:
  std::size_t nbits_ = 0;
  int radius_ = 0;
  std::vector<std::uint64_t> words_;
};

inline constexpr std::size_t kDefaultFingerprintBits = 2048;
inline constexpr int kDefaultFingerprintRadius = 2;

/// Morgan-style circular fingerprint. The radius-0 invariant of an atom is
/// its element, aromaticity, charge and isotope label; each further round
/// folds in degree, hydrogen count and the sorted (bond order, neighbour
/// invariant) pairs with FNV-1a. Every invariant from every round sets bit
/// `invariant % nbits`.
Fingerprint circular_fingerprint(const Molecule& m, int radius = kDefaultFingerprintRadius,
                                 std::size_t nbits = kDefaultFingerprintBits);

/// Per-atom invariants after `radius` rounds (exposed for tests).
std::vector<std::uint64_t> atom_invariants(const Molecule& m, int radius);

/// |a & b| / |a | b|; 1.0 when both are empty. Lengths must match.
double tanimoto(const Fingerprint& a, const Fingerprint& b);

}  // namespace esp::chem

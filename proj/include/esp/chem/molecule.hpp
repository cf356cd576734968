#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace esp::chem {

enum class BondOrder : std::uint8_t { Single = 0, Double = 1, Triple = 2, Aromatic = 3 };

inline constexpr std::size_t kBondOrderCount = 4;

/// Valence contribution used for hydrogen filling; aromatic bonds count 1.
int valence_contribution(BondOrder order);

struct Atom {
  std::string element;  // canonical capitalised symbol, e.g. "C", "Cl"
  bool aromatic = false;
  int formal_charge = 0;
  int implicit_h = 0;
  int isotope = 0;  // 0 = natural abundance

  bool operator==(const Atom&) const = default;
};

struct Bond {
  std::size_t a;
  std::size_t b;
  BondOrder order;

  std::size_t other(std::size_t atom) const { return atom == a ? b : a; }
  bool operator==(const Bond&) const = default;
};

struct Neighbor {
  std::size_t atom;
  std::size_t bond;
};

/// Molecular graph. Bond endpoints always index existing atoms; self bonds and
/// duplicate bonds are rejected at insertion.
class Molecule {
 public:
  Molecule() = default;

  std::size_t add_atom(Atom atom);
  std::size_t add_bond(std::size_t a, std::size_t b, BondOrder order);
  bool has_bond(std::size_t a, std::size_t b) const;

  std::span<const Atom> atoms() const { return atoms_; }
  std::span<const Bond> bonds() const { return bonds_; }
  std::span<const Neighbor> neighbors(std::size_t atom) const { return adjacency_[atom]; }

  Atom& atom(std::size_t i) { return atoms_[i]; }
  const Atom& atom(std::size_t i) const { return atoms_[i]; }
  std::size_t atom_count() const { return atoms_.size(); }
  std::size_t bond_count() const { return bonds_.size(); }
  bool empty() const { return atoms_.empty(); }

  /// Sum of bond valence contributions at an atom (aromatic counts 1).
  int bond_valence(std::size_t atom) const;

  const std::string& source_smiles() const { return source_smiles_; }
  void set_source_smiles(std::string s) { source_smiles_ = std::move(s); }

  /// Relabel atoms: new index of old atom i is `new_index[i]`. Bonds are
  /// emitted in an order that depends on the new labels only.
  Molecule permuted(std::span<const std::size_t> new_index) const;

 private:
  std::vector<Atom> atoms_;
  std::vector<Bond> bonds_;
  std::vector<std::vector<Neighbor>> adjacency_;
  std::string source_smiles_;
};

/// Isomorphism-invariant signature from iterated colour refinement. Equal
/// graphs always agree; non-isomorphic graphs disagree in all but contrived
/// regular cases.
std::string canonical_signature(const Molecule& m);

}  // namespace esp::chem

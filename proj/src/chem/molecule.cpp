#include "esp/chem/molecule.hpp"

#include <algorithm>
#include <map>
#include <sstream>
#include <tuple>

#include "esp/common/error.hpp"
#include "esp/common/hash.hpp"

namespace esp::chem {

int valence_contribution(BondOrder order) {
  switch (order) {
    case BondOrder::Single: return 1;
    case BondOrder::Double: return 2;
    case BondOrder::Triple: return 3;
    case BondOrder::Aromatic: return 1;
  }
  return 1;
}

std::size_t Molecule::add_atom(Atom atom) {
  if (atom.implicit_h < 0)
    throw Error(ErrorCode::InvalidArgument, "negative hydrogen count on atom " + atom.element);
  atoms_.push_back(std::move(atom));
  adjacency_.emplace_back();
  return atoms_.size() - 1;
}

std::size_t Molecule::add_bond(std::size_t a, std::size_t b, BondOrder order) {
  if (a >= atoms_.size() || b >= atoms_.size())
    throw Error(ErrorCode::InvalidArgument, "bond endpoint out of range");
  if (a == b) throw Error(ErrorCode::InvalidArgument, "self bond on atom " + std::to_string(a));
  if (has_bond(a, b))
    throw Error(ErrorCode::InvalidArgument,
                "duplicate bond " + std::to_string(a) + "-" + std::to_string(b));
  bonds_.push_back({a, b, order});
  const std::size_t id = bonds_.size() - 1;
  adjacency_[a].push_back({b, id});
  adjacency_[b].push_back({a, id});
  return id;
}

bool Molecule::has_bond(std::size_t a, std::size_t b) const {
  if (a >= adjacency_.size()) return false;
  return std::any_of(adjacency_[a].begin(), adjacency_[a].end(),
                     [b](const Neighbor& n) { return n.atom == b; });
}

int Molecule::bond_valence(std::size_t atom) const {
  int sum = 0;
  for (const auto& n : adjacency_[atom]) sum += valence_contribution(bonds_[n.bond].order);
  return sum;
}

Molecule Molecule::permuted(std::span<const std::size_t> new_index) const {
  if (new_index.size() != atoms_.size())
    throw Error(ErrorCode::DimensionMismatch, "permutation length differs from atom count");
  std::vector<std::size_t> old_of(atoms_.size());
  for (std::size_t i = 0; i < new_index.size(); ++i) old_of.at(new_index[i]) = i;

  Molecule out;
  for (std::size_t n = 0; n < old_of.size(); ++n) out.add_atom(atoms_[old_of[n]]);

  std::vector<std::tuple<std::size_t, std::size_t, BondOrder>> relabelled;
  relabelled.reserve(bonds_.size());
  for (const auto& bd : bonds_) {
    std::size_t a = new_index[bd.a], b = new_index[bd.b];
    relabelled.emplace_back(std::min(a, b), std::max(a, b), bd.order);
  }
  std::sort(relabelled.begin(), relabelled.end());
  for (const auto& [a, b, o] : relabelled) out.add_bond(a, b, o);
  out.source_smiles_ = source_smiles_;
  return out;
}

std::string canonical_signature(const Molecule& m) {
  const std::size_t n = m.atom_count();
  std::vector<std::uint64_t> color(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Atom& a = m.atom(i);
    color[i] = Fnv1a()
                   .str(a.element)
                   .u64(a.aromatic)
                   .i64(a.formal_charge)
                   .i64(a.implicit_h)
                   .i64(a.isotope)
                   .u64(m.neighbors(i).size())
                   .value();
  }
  std::vector<std::pair<std::uint64_t, std::uint64_t>> env;
  for (std::size_t round = 0; round < n; ++round) {
    std::vector<std::uint64_t> next(n);
    for (std::size_t i = 0; i < n; ++i) {
      env.clear();
      for (const auto& nb : m.neighbors(i))
        env.emplace_back(static_cast<std::uint64_t>(m.bonds()[nb.bond].order), color[nb.atom]);
      std::sort(env.begin(), env.end());
      Fnv1a h;
      h.u64(color[i]);
      for (const auto& [o, c] : env) h.u64(o).u64(c);
      next[i] = h.value();
    }
    color.swap(next);
  }

  std::vector<std::uint64_t> atoms_sorted = color;
  std::sort(atoms_sorted.begin(), atoms_sorted.end());
  std::vector<std::tuple<std::uint64_t, std::uint64_t, int>> edges;
  for (const auto& bd : m.bonds()) {
    auto [lo, hi] = std::minmax(color[bd.a], color[bd.b]);
    edges.emplace_back(lo, hi, static_cast<int>(bd.order));
  }
  std::sort(edges.begin(), edges.end());

  std::ostringstream os;
  os << std::hex;
  for (auto c : atoms_sorted) os << c << ',';
  os << '|';
  for (const auto& [a, b, o] : edges) os << a << '-' << b << ':' << o << ',';
  return os.str();
}

}  // namespace esp::chem

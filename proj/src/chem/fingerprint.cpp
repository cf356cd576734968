#include "esp/chem/fingerprint.hpp"

#include <algorithm>
#include <bit>

#include "esp/chem/elements.hpp"
#include "esp/common/error.hpp"
#include "esp/common/hash.hpp"

namespace esp::chem {

Fingerprint::Fingerprint(std::size_t nbits, int radius)
    : nbits_(nbits), radius_(radius), words_((nbits + 63) / 64, 0) {
  if (nbits == 0 || !std::has_single_bit(nbits))
    throw Error(ErrorCode::InvalidArgument,
                "fingerprint length must be a power of two, got " + std::to_string(nbits));
}

void Fingerprint::set(std::size_t bit) { words_[bit / 64] |= std::uint64_t{1} << (bit % 64); }

bool Fingerprint::test(std::size_t bit) const {
  return (words_[bit / 64] >> (bit % 64)) & 1U;
}

std::size_t Fingerprint::count() const {
  std::size_t n = 0;
  for (auto w : words_) n += static_cast<std::size_t>(std::popcount(w));
  return n;
}

std::vector<std::size_t> Fingerprint::on_bits() const {
  std::vector<std::size_t> out;
  for (std::size_t w = 0; w < words_.size(); ++w) {
    std::uint64_t word = words_[w];
    while (word) {
      int b = std::countr_zero(word);
      out.push_back(w * 64 + static_cast<std::size_t>(b));
      word &= word - 1;
    }
  }
  return out;
}

namespace {

std::vector<std::vector<std::uint64_t>> invariant_rounds(const Molecule& m, int radius) {
  const std::size_t n = m.atom_count();
  std::vector<std::vector<std::uint64_t>> rounds;
  std::vector<std::uint64_t> inv(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Atom& a = m.atom(i);
    const ElementInfo* e = find_element(a.element);
    inv[i] = Fnv1a()
                 .i64(e ? e->atomic_number : 0)
                 .u64(a.aromatic)
                 .i64(a.formal_charge)
                 .i64(a.isotope)
                 .value();
  }
  rounds.push_back(inv);

  std::vector<std::pair<std::uint64_t, std::uint64_t>> env;
  for (int r = 1; r <= radius; ++r) {
    std::vector<std::uint64_t> next(n);
    for (std::size_t i = 0; i < n; ++i) {
      env.clear();
      for (const auto& nb : m.neighbors(i))
        env.emplace_back(static_cast<std::uint64_t>(m.bonds()[nb.bond].order), inv[nb.atom]);
      std::sort(env.begin(), env.end());
      Fnv1a h;
      h.u64(inv[i]).i64(r).u64(env.size()).i64(m.atom(i).implicit_h);
      for (const auto& [order, nbr] : env) h.u64(order).u64(nbr);
      next[i] = h.value();
    }
    inv.swap(next);
    rounds.push_back(inv);
  }
  return rounds;
}

}  // namespace

std::vector<std::uint64_t> atom_invariants(const Molecule& m, int radius) {
  if (radius < 0) throw Error(ErrorCode::InvalidArgument, "negative fingerprint radius");
  return invariant_rounds(m, radius).back();
}

Fingerprint circular_fingerprint(const Molecule& m, int radius, std::size_t nbits) {
  if (radius < 0) throw Error(ErrorCode::InvalidArgument, "negative fingerprint radius");
  Fingerprint fp(nbits, radius);
  for (const auto& round : invariant_rounds(m, radius))
    for (auto inv : round) fp.set(static_cast<std::size_t>(inv % nbits));
  return fp;
}

double tanimoto(const Fingerprint& a, const Fingerprint& b) {
  if (a.size() != b.size())
    throw Error(ErrorCode::DimensionMismatch, "fingerprint lengths differ");
  std::size_t inter = 0, uni = 0;
  for (std::size_t w = 0; w < a.words().size(); ++w) {
    inter += static_cast<std::size_t>(std::popcount(a.words()[w] & b.words()[w]));
    uni += static_cast<std::size_t>(std::popcount(a.words()[w] | b.words()[w]));
  }
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace esp::chem

#include "esp/chem/smiles.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <set>

#include "esp/chem/elements.hpp"
#include "esp/common/error.hpp"

namespace esp::chem {

int implicit_hydrogens(std::string_view element, bool aromatic, int bond_valence) {
  auto valences = default_valences(element);
  if (valences.empty()) return -1;
  if (aromatic) {
    if (bond_valence > valences.back()) return -1;
    return std::max(0, valences.front() - (bond_valence + 1));
  }
  for (int v : valences)
    if (v >= bond_valence) return v - bond_valence;
  return -1;
}

namespace {

struct RingOpening {
  std::size_t atom;
  std::optional<BondOrder> order;
  std::size_t offset;
};

class SmilesParser {
 public:
  SmilesParser(std::string_view s, std::vector<std::string>* warnings)
      : s_(s), warnings_(warnings) {}

  Molecule run() {
    if (s_.empty()) throw Error(ErrorCode::SmilesSyntax, "empty SMILES", 0);
    for (std::size_t i = 0; i < s_.size(); ++i)
      if (static_cast<unsigned char>(s_[i]) > 127)
        throw Error(ErrorCode::SmilesSyntax, "non-ASCII byte", i);

    while (pos_ < s_.size()) step();

    if (!branches_.empty())
      throw Error(ErrorCode::UnbalancedParenthesis, "unclosed branch", branches_.back().second);
    if (!rings_.empty()) {
      const auto& first = rings_.begin()->second;
      throw Error(ErrorCode::UnbalancedRingClosure,
                  "ring bond " + std::to_string(rings_.begin()->first) + " never closed",
                  first.offset);
    }
    if (pending_bond_)
      throw Error(ErrorCode::SmilesSyntax, "dangling bond symbol", pending_bond_offset_);
    if (mol_.empty()) throw Error(ErrorCode::SmilesSyntax, "no atoms", 0);

    fill_hydrogens();
    mol_.set_source_smiles(std::string(s_));
    return std::move(mol_);
  }

 private:
  void warn(const std::string& w) {
    if (warnings_) warnings_->push_back(w);
  }

  void step() {
    const char c = s_[pos_];
    switch (c) {
      case '(':
        if (!prev_) throw Error(ErrorCode::UnbalancedParenthesis, "branch without atom", pos_);
        branches_.emplace_back(*prev_, pos_);
        ++pos_;
        return;
      case ')':
        if (branches_.empty())
          throw Error(ErrorCode::UnbalancedParenthesis, "unmatched ')'", pos_);
        if (pending_bond_) throw Error(ErrorCode::SmilesSyntax, "bond before ')'", pos_);
        prev_ = branches_.back().first;
        branches_.pop_back();
        ++pos_;
        return;
      case '-': set_bond(BondOrder::Single); return;
      case '=': set_bond(BondOrder::Double); return;
      case '#': set_bond(BondOrder::Triple); return;
      case ':': set_bond(BondOrder::Aromatic); return;
      case '/':
      case '\\':
        if (!stereo_warned_) {
          warn("directional bond markers ignored");
          stereo_warned_ = true;
        }
        set_bond(BondOrder::Single);
        return;
      case '.':
        if (pending_bond_) throw Error(ErrorCode::SmilesSyntax, "bond before '.'", pos_);
        prev_.reset();
        ++pos_;
        return;
      case '%': {
        if (pos_ + 2 >= s_.size() || !std::isdigit(static_cast<unsigned char>(s_[pos_ + 1])) ||
            !std::isdigit(static_cast<unsigned char>(s_[pos_ + 2])))
          throw Error(ErrorCode::SmilesSyntax, "malformed %nn ring bond", pos_);
        int num = (s_[pos_ + 1] - '0') * 10 + (s_[pos_ + 2] - '0');
        ring_bond(num, pos_);
        pos_ += 3;
        return;
      }
      case '[': bracket_atom(); return;
      default: break;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      ring_bond(c - '0', pos_);
      ++pos_;
      return;
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      organic_atom();
      return;
    }
    throw Error(ErrorCode::SmilesSyntax, std::string("unexpected character '") + c + "'", pos_);
  }

  void set_bond(BondOrder o) {
    if (pending_bond_) throw Error(ErrorCode::SmilesSyntax, "two consecutive bonds", pos_);
    if (!prev_) throw Error(ErrorCode::SmilesSyntax, "bond without preceding atom", pos_);
    pending_bond_ = o;
    pending_bond_offset_ = pos_;
    ++pos_;
  }

  void ring_bond(int num, std::size_t offset) {
    if (!prev_) throw Error(ErrorCode::SmilesSyntax, "ring bond without atom", offset);
    auto it = rings_.find(num);
    if (it == rings_.end()) {
      rings_[num] = RingOpening{*prev_, pending_bond_, offset};
      pending_bond_.reset();
      return;
    }
    RingOpening open = it->second;
    rings_.erase(it);
    std::optional<BondOrder> order = pending_bond_;
    pending_bond_.reset();
    if (open.order && order && *open.order != *order)
      throw Error(ErrorCode::UnbalancedRingClosure, "conflicting ring bond orders", offset);
    if (!order) order = open.order;
    if (open.atom == *prev_)
      throw Error(ErrorCode::UnbalancedRingClosure, "ring bond closes on its own atom", offset);
    if (mol_.has_bond(open.atom, *prev_))
      throw Error(ErrorCode::UnbalancedRingClosure, "ring bond duplicates existing bond", offset);
    connect(open.atom, *prev_, order);
  }

  void connect(std::size_t a, std::size_t b, std::optional<BondOrder> order) {
    BondOrder o = order.value_or(
        mol_.atom(a).aromatic && mol_.atom(b).aromatic ? BondOrder::Aromatic : BondOrder::Single);
    mol_.add_bond(a, b, o);
  }

  void place_atom(Atom atom, bool organic, std::size_t offset) {
    std::size_t idx = mol_.add_atom(std::move(atom));
    organic_.push_back(organic);
    offsets_.push_back(offset);
    if (prev_) {
      connect(*prev_, idx, pending_bond_);
    } else if (pending_bond_) {
      throw Error(ErrorCode::SmilesSyntax, "bond without preceding atom", pending_bond_offset_);
    }
    pending_bond_.reset();
    prev_ = idx;
  }

  void organic_atom() {
    const std::size_t start = pos_;
    const char c = s_[pos_];
    Atom atom;
    if (c == 'C' && pos_ + 1 < s_.size() && s_[pos_ + 1] == 'l') {
      atom.element = "Cl";
      pos_ += 2;
    } else if (c == 'B' && pos_ + 1 < s_.size() && s_[pos_ + 1] == 'r') {
      atom.element = "Br";
      pos_ += 2;
    } else if (std::string_view("BCNOPSFI").find(c) != std::string_view::npos) {
      atom.element = std::string(1, c);
      ++pos_;
    } else if (std::string_view("bcnops").find(c) != std::string_view::npos) {
      atom.element = std::string(1, static_cast<char>(std::toupper(c)));
      atom.aromatic = true;
      ++pos_;
    } else {
      throw Error(ErrorCode::UnknownElement, std::string("unknown organic-subset atom '") + c + "'",
                  start);
    }
    place_atom(std::move(atom), true, start);
  }

  int read_int() {
    int v = 0;
    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_])))
      v = v * 10 + (s_[pos_++] - '0');
    return v;
  }

  void bracket_atom() {
    const std::size_t start = pos_;
    ++pos_;
    Atom atom;
    if (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_])))
      atom.isotope = read_int();

    if (pos_ >= s_.size()) throw Error(ErrorCode::SmilesSyntax, "unterminated bracket", start);
    const std::size_t sym_at = pos_;
    char c0 = s_[pos_];
    if (!std::isalpha(static_cast<unsigned char>(c0)))
      throw Error(ErrorCode::UnknownElement, "missing element symbol", sym_at);
    if (std::islower(static_cast<unsigned char>(c0))) {
      atom.aromatic = true;
      // Two-letter aromatic symbols: se, as.
      if (pos_ + 1 < s_.size() && ((c0 == 's' && s_[pos_ + 1] == 'e') ||
                                   (c0 == 'a' && s_[pos_ + 1] == 's'))) {
        atom.element = std::string(1, static_cast<char>(std::toupper(c0))) + s_[pos_ + 1];
        pos_ += 2;
      } else {
        atom.element = std::string(1, static_cast<char>(std::toupper(c0)));
        ++pos_;
      }
      if (!aromatic_capable(atom.element))
        throw Error(ErrorCode::UnknownElement, "element cannot be aromatic: " + atom.element,
                    sym_at);
    } else {
      std::string one(1, c0);
      std::string two = one;
      if (pos_ + 1 < s_.size() && std::islower(static_cast<unsigned char>(s_[pos_ + 1])))
        two += s_[pos_ + 1];
      if (two.size() == 2 && find_element(two)) {
        atom.element = two;
        pos_ += 2;
      } else {
        atom.element = one;
        ++pos_;
      }
    }
    if (!find_element(atom.element))
      throw Error(ErrorCode::UnknownElement, "unknown element '" + atom.element + "'", sym_at);

    if (pos_ < s_.size() && s_[pos_] == '@') {
      while (pos_ < s_.size() && s_[pos_] == '@') ++pos_;
      // Extended classes: @TH1, @AL2, @SP3, @TB12, @OH30.
      for (std::string_view cls : {"TH", "AL", "SP", "TB", "OH"}) {
        if (s_.substr(pos_, 2) == cls) {
          pos_ += 2;
          read_int();
          break;
        }
      }
      if (!chiral_warned_) {
        warn("chirality markers ignored");
        chiral_warned_ = true;
      }
    }

    if (pos_ < s_.size() && s_[pos_] == 'H') {
      ++pos_;
      atom.implicit_h = 1;
      if (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_])))
        atom.implicit_h = read_int();
    }

    if (pos_ < s_.size() && (s_[pos_] == '+' || s_[pos_] == '-')) {
      const char sign = s_[pos_];
      const int unit = sign == '+' ? 1 : -1;
      ++pos_;
      if (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
        atom.formal_charge = unit * read_int();
      } else {
        int n = 1;
        while (pos_ < s_.size() && s_[pos_] == sign) {
          ++n;
          ++pos_;
        }
        atom.formal_charge = unit * n;
      }
    }

    if (pos_ < s_.size() && s_[pos_] == ':') {
      ++pos_;
      read_int();  // atom class, unused
    }

    if (pos_ >= s_.size() || s_[pos_] != ']')
      throw Error(ErrorCode::SmilesSyntax, "expected ']'", pos_ < s_.size() ? pos_ : start);
    ++pos_;
    place_atom(std::move(atom), false, start);
  }

  void fill_hydrogens() {
    for (std::size_t i = 0; i < mol_.atom_count(); ++i) {
      if (!organic_[i]) continue;
      Atom& a = mol_.atom(i);
      const int h = implicit_hydrogens(a.element, a.aromatic, mol_.bond_valence(i));
      if (h < 0)
        throw Error(ErrorCode::ValenceOverflow,
                    "valence exceeded on " + a.element + " (" +
                        std::to_string(mol_.bond_valence(i)) + " bonds)",
                    offsets_[i]);
      a.implicit_h = h;
    }
  }

  std::string_view s_;
  std::vector<std::string>* warnings_;
  std::size_t pos_ = 0;
  Molecule mol_;
  std::vector<bool> organic_;
  std::vector<std::size_t> offsets_;
  std::optional<std::size_t> prev_;
  std::optional<BondOrder> pending_bond_;
  std::size_t pending_bond_offset_ = 0;
  std::vector<std::pair<std::size_t, std::size_t>> branches_;  // (atom, offset of '(')
  std::map<int, RingOpening> rings_;
  bool stereo_warned_ = false;
  bool chiral_warned_ = false;
};

// ---------------------------------------------------------------------------
// Writer

class SmilesWriter {
 public:
  explicit SmilesWriter(const Molecule& m)
      : m_(m), order_(m.atom_count(), kUnvisited), parent_bond_(m.atom_count(), kNone) {}

  std::string run() {
    for (std::size_t root = 0; root < m_.atom_count(); ++root) {
      if (order_[root] != kUnvisited) continue;
      discover(root);
      if (!out_.empty()) out_ += '.';
      write(root);
    }
    return out_;
  }

 private:
  static constexpr std::size_t kUnvisited = static_cast<std::size_t>(-1);
  static constexpr std::size_t kNone = static_cast<std::size_t>(-1);

  void discover(std::size_t root) {
    // Iterative DFS assigning preorder, tree edges and ring-closure edges.
    std::vector<std::pair<std::size_t, std::size_t>> stack;  // (atom, next neighbor index)
    order_[root] = preorder_.size();
    preorder_.push_back(root);
    stack.emplace_back(root, 0);
    while (!stack.empty()) {
      auto& [atom, next] = stack.back();
      auto nbrs = m_.neighbors(atom);
      if (next >= nbrs.size()) {
        stack.pop_back();
        continue;
      }
      const Neighbor nb = nbrs[next++];
      if (nb.bond == parent_bond_[atom]) continue;
      if (order_[nb.atom] == kUnvisited) {
        order_[nb.atom] = preorder_.size();
        preorder_.push_back(nb.atom);
        parent_bond_[nb.atom] = nb.bond;
        children_[atom].push_back(nb);
        stack.emplace_back(nb.atom, 0);
      } else if (!ring_bond_.count(nb.bond)) {
        ring_bond_.insert(nb.bond);
      }
    }
  }

  std::string bond_symbol(const Bond& b) const {
    const bool both_aromatic = m_.atom(b.a).aromatic && m_.atom(b.b).aromatic;
    switch (b.order) {
      case BondOrder::Single: return both_aromatic ? "-" : "";
      case BondOrder::Double: return "=";
      case BondOrder::Triple: return "#";
      case BondOrder::Aromatic: return both_aromatic ? "" : ":";
    }
    return "";
  }

  std::string atom_text(std::size_t i) const {
    const Atom& a = m_.atom(i);
    const bool organic_ok = in_organic_subset(a.element) && a.formal_charge == 0 &&
                            a.isotope == 0 &&
                            (!a.aromatic || std::string_view("BCNOPS").find(a.element) !=
                                                std::string_view::npos) &&
                            implicit_hydrogens(a.element, a.aromatic, m_.bond_valence(i)) ==
                                a.implicit_h;
    std::string sym = a.element;
    if (a.aromatic) {
      for (auto& ch : sym) ch = static_cast<char>(std::tolower(ch));
    }
    if (organic_ok) return sym;
    std::string t = "[";
    if (a.isotope) t += std::to_string(a.isotope);
    t += sym;
    if (a.implicit_h > 0) {
      t += 'H';
      if (a.implicit_h > 1) t += std::to_string(a.implicit_h);
    }
    if (a.formal_charge != 0) {
      t += a.formal_charge > 0 ? '+' : '-';
      int mag = a.formal_charge > 0 ? a.formal_charge : -a.formal_charge;
      if (mag > 1) t += std::to_string(mag);
    }
    t += ']';
    return t;
  }

  static std::string ring_label(int d) {
    if (d < 10) return std::string(1, static_cast<char>('0' + d));
    return "%" + std::to_string(d);
  }

  int take_digit() {
    for (int d = 1; d < 100; ++d)
      if (!used_digits_.count(d)) {
        used_digits_.insert(d);
        return d;
      }
    throw Error(ErrorCode::InvalidArgument, "more than 99 simultaneous ring bonds");
  }

  void write(std::size_t atom) {
    out_ += atom_text(atom);
    // Ring closures incident to this atom, in neighbor order.
    for (const auto& nb : m_.neighbors(atom)) {
      if (!ring_bond_.count(nb.bond)) continue;
      auto it = open_digit_.find(nb.bond);
      if (it != open_digit_.end()) {
        out_ += ring_label(it->second);
        used_digits_.erase(it->second);
        open_digit_.erase(it);
      } else {
        int d = take_digit();
        open_digit_[nb.bond] = d;
        out_ += bond_symbol(m_.bonds()[nb.bond]);
        out_ += ring_label(d);
      }
    }
    auto it = children_.find(atom);
    if (it == children_.end()) return;
    const auto& kids = it->second;
    for (std::size_t k = 0; k < kids.size(); ++k) {
      const bool branch = k + 1 < kids.size();
      if (branch) out_ += '(';
      out_ += bond_symbol(m_.bonds()[kids[k].bond]);
      write(kids[k].atom);
      if (branch) out_ += ')';
    }
  }

  const Molecule& m_;
  std::vector<std::size_t> order_;
  std::vector<std::size_t> parent_bond_;
  std::vector<std::size_t> preorder_;
  std::map<std::size_t, std::vector<Neighbor>> children_;
  std::set<std::size_t> ring_bond_;
  std::map<std::size_t, int> open_digit_;
  std::set<int> used_digits_;
  std::string out_;
};

}  // namespace

Molecule parse_smiles(std::string_view smiles, std::vector<std::string>* warnings) {
  return SmilesParser(smiles, warnings).run();
}

std::string render_smiles(const Molecule& m) { return SmilesWriter(m).run(); }

}  // namespace esp::chem

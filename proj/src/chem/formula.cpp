#include "esp/chem/formula.hpp"

#include <cctype>
#include <vector>

#include "esp/chem/elements.hpp"
#include "esp/common/error.hpp"

namespace esp::chem {

void Formula::add(const std::string& element, int count) {
  if (count <= 0) return;
  counts_[element] += count;
}

int Formula::count(const std::string& element) const {
  auto it = counts_.find(element);
  return it == counts_.end() ? 0 : it->second;
}

std::string Formula::to_string() const {
  std::string out;
  auto emit = [&out](const std::string& el, int n) {
    out += el;
    if (n > 1) out += std::to_string(n);
  };
  const bool has_carbon = counts_.count("C") > 0;
  if (has_carbon) {
    emit("C", counts_.at("C"));
    if (auto it = counts_.find("H"); it != counts_.end()) emit("H", it->second);
  }
  for (const auto& [el, n] : counts_) {
    if (has_carbon && (el == "C" || el == "H")) continue;
    emit(el, n);
  }
  return out;
}

Formula Formula::parse(std::string_view text) {
  Formula f;
  std::size_t i = 0;
  while (i < text.size()) {
    if (!std::isupper(static_cast<unsigned char>(text[i])))
      throw Error(ErrorCode::InvalidArgument, "malformed formula '" + std::string(text) + "'", i);
    std::string el(1, text[i++]);
    while (i < text.size() && std::islower(static_cast<unsigned char>(text[i]))) el += text[i++];
    if (!find_element(el))
      throw Error(ErrorCode::InvalidArgument, "unknown element '" + el + "' in formula", i);
    int n = 0;
    bool digits = false;
    while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
      n = n * 10 + (text[i++] - '0');
      digits = true;
    }
    if (!digits) n = 1;
    if (n == 0) throw Error(ErrorCode::InvalidArgument, "zero count in formula", i);
    f.add(el, n);
  }
  if (f.empty()) throw Error(ErrorCode::InvalidArgument, "empty formula");
  return f;
}

Formula molecular_formula(const Molecule& m) {
  Formula f;
  int hydrogens = 0;
  for (const auto& a : m.atoms()) {
    f.add(a.element, 1);
    hydrogens += a.implicit_h;
  }
  f.add("H", hydrogens);
  return f;
}

double monoisotopic_mass(const Molecule& m) {
  if (m.empty()) throw Error(ErrorCode::EmptyMolecule, "molecule has no atoms");
  double mass = 0.0;
  for (const auto& a : m.atoms()) {
    if (a.isotope > 0) {
      mass += isotope_mass(a.element, a.isotope);
    } else {
      const ElementInfo* e = find_element(a.element);
      if (!e) throw Error(ErrorCode::UnknownElement, "no mass for element " + a.element);
      mass += e->monoisotopic_mass;
    }
    mass += a.implicit_h * kHydrogenMass;
  }
  return mass;
}

}  // namespace esp::chem

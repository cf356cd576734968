#include "esp/chem/elements.hpp"

#include <array>
#include <cmath>

namespace esp::chem {

namespace {

constexpr std::array kElements = {
    ElementInfo{"H", 1, 1.00782503207},    ElementInfo{"He", 2, 4.00260325415},
    ElementInfo{"Li", 3, 7.01600455},      ElementInfo{"Be", 4, 9.0121822},
    ElementInfo{"B", 5, 11.0093054},       ElementInfo{"C", 6, 12.0},
    ElementInfo{"N", 7, 14.0030740048},    ElementInfo{"O", 8, 15.99491461956},
    ElementInfo{"F", 9, 18.99840322},      ElementInfo{"Ne", 10, 19.9924401754},
    ElementInfo{"Na", 11, 22.9897692809},  ElementInfo{"Mg", 12, 23.985041700},
    ElementInfo{"Al", 13, 26.98153863},    ElementInfo{"Si", 14, 27.9769265325},
    ElementInfo{"P", 15, 30.97376163},     ElementInfo{"S", 16, 31.97207100},
    ElementInfo{"Cl", 17, 34.96885268},    ElementInfo{"Ar", 18, 39.9623831225},
    ElementInfo{"K", 19, 38.96370668},     ElementInfo{"Ca", 20, 39.96259098},
    ElementInfo{"Ti", 22, 47.9479463},     ElementInfo{"V", 23, 50.9439595},
    ElementInfo{"Cr", 24, 51.9405075},     ElementInfo{"Mn", 25, 54.9380451},
    ElementInfo{"Fe", 26, 55.9349375},     ElementInfo{"Co", 27, 58.9331950},
    ElementInfo{"Ni", 28, 57.9353429},     ElementInfo{"Cu", 29, 62.9295975},
    ElementInfo{"Zn", 30, 63.9291422},     ElementInfo{"Ga", 31, 68.9255736},
    ElementInfo{"Ge", 32, 73.9211778},     ElementInfo{"As", 33, 74.9215965},
    ElementInfo{"Se", 34, 79.9165213},     ElementInfo{"Br", 35, 78.9183371},
    ElementInfo{"Kr", 36, 83.911507},      ElementInfo{"Rb", 37, 84.911789738},
    ElementInfo{"Sr", 38, 87.9056121},     ElementInfo{"Mo", 42, 97.9054082},
    ElementInfo{"Ag", 47, 106.905097},     ElementInfo{"Cd", 48, 113.9033585},
    ElementInfo{"Sn", 50, 119.9021947},    ElementInfo{"Sb", 51, 120.9038157},
    ElementInfo{"Te", 52, 129.9062244},    ElementInfo{"I", 53, 126.904473},
    ElementInfo{"Xe", 54, 131.9041535},    ElementInfo{"Cs", 55, 132.905451933},
    ElementInfo{"Ba", 56, 137.9052472},    ElementInfo{"Pt", 78, 194.9647911},
    ElementInfo{"Au", 79, 196.9665687},    ElementInfo{"Hg", 80, 201.970643},
    ElementInfo{"Pb", 82, 207.9766521},    ElementInfo{"Bi", 83, 208.9803987},
};

struct IsotopeInfo {
  std::string_view symbol;
  int mass_number;
  double mass;
};

constexpr std::array kIsotopes = {
    IsotopeInfo{"H", 2, 2.01410177812},   IsotopeInfo{"H", 3, 3.0160492779},
    IsotopeInfo{"C", 13, 13.0033548378},  IsotopeInfo{"C", 14, 14.003241989},
    IsotopeInfo{"N", 15, 15.0001088982},  IsotopeInfo{"O", 17, 16.99913170},
    IsotopeInfo{"O", 18, 17.9991610},     IsotopeInfo{"S", 34, 33.96786690},
    IsotopeInfo{"Cl", 37, 36.96590259},   IsotopeInfo{"Br", 81, 80.9162906},
};

constexpr std::array<int, 1> kVal1 = {1};
constexpr std::array<int, 1> kVal2 = {2};
constexpr std::array<int, 1> kVal3 = {3};
constexpr std::array<int, 1> kVal4 = {4};
constexpr std::array<int, 2> kVal35 = {3, 5};
constexpr std::array<int, 3> kVal246 = {2, 4, 6};

}  // namespace

const ElementInfo* find_element(std::string_view symbol) {
  for (const auto& e : kElements)
    if (e.symbol == symbol) return &e;
  return nullptr;
}

double isotope_mass(std::string_view symbol, int mass_number) {
  for (const auto& iso : kIsotopes)
    if (iso.symbol == symbol && iso.mass_number == mass_number) return iso.mass;
  const ElementInfo* e = find_element(symbol);
  if (e && std::lround(e->monoisotopic_mass) == mass_number) return e->monoisotopic_mass;
  return static_cast<double>(mass_number);
}

std::span<const int> default_valences(std::string_view s) {
  if (s == "B") return kVal3;
  if (s == "C") return kVal4;
  if (s == "N" || s == "P") return kVal35;
  if (s == "O") return kVal2;
  if (s == "S") return kVal246;
  if (s == "F" || s == "Cl" || s == "Br" || s == "I") return kVal1;
  return {};
}

bool in_organic_subset(std::string_view s) { return !default_valences(s).empty(); }

bool aromatic_capable(std::string_view s) {
  return s == "B" || s == "C" || s == "N" || s == "O" || s == "P" || s == "S" || s == "Se" ||
         s == "As";
}

}  // namespace esp::chem

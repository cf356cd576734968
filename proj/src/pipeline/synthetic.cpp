#include "esp/pipeline/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>

#include "esp/chem/elements.hpp"
#include "esp/chem/formula.hpp"
#include "esp/chem/smiles.hpp"
#include "esp/common/error.hpp"
#include "esp/common/rng.hpp"

namespace esp::pipeline {

namespace {

constexpr double kProton = 1.007276;

int valence(char element) { return element == 'C' ? 4 : element == 'N' ? 3 : 2; }

double atom_mass(const chem::Atom& a) {
  static const double h = chem::find_element("H")->monoisotopic_mass;
  return chem::find_element(a.element)->monoisotopic_mass + a.implicit_h * h;
}

/// Random labelled tree over the given heavy atoms, written as SMILES.
std::string random_tree_smiles(std::vector<char> atoms, Rng& rng) {
  rng.shuffle(atoms);
  // Start from a carbon so the root can always take children.
  auto c = std::find(atoms.begin(), atoms.end(), 'C');
  std::iter_swap(atoms.begin(), c);
  const std::size_t n = atoms.size();
  std::vector<std::vector<std::size_t>> children(n);
  std::vector<int> degree(n, 0);
  for (std::size_t i = 1; i < n; ++i) {
    std::vector<std::size_t> open;
    for (std::size_t j = 0; j < i; ++j)
      if (degree[j] < valence(atoms[j])) open.push_back(j);
    if (open.empty()) return {};
    const std::size_t parent = open[rng.below(open.size())];
    children[parent].push_back(i);
    ++degree[parent];
    ++degree[i];
  }
  std::function<std::string(std::size_t)> write = [&](std::size_t u) {
    std::string s(1, atoms[u]);
    for (std::size_t k = 0; k < children[u].size(); ++k) {
      const std::string sub = write(children[u][k]);
      s += k + 1 < children[u].size() ? "(" + sub + ")" : sub;
    }
    return s;
  };
  return write(0);
}

struct Composition {
  int c, n, o;
  std::vector<char> atoms() const {
    std::vector<char> v(c, 'C');
    v.insert(v.end(), n, 'N');
    v.insert(v.end(), o, 'O');
    return v;
  }
};

}  // namespace

std::vector<spectra::Peak> synthetic_peaks(const chem::Molecule& m, double collision_energy) {
  const double ce = std::clamp(collision_energy, 0.0, 1.0);
  double total = 0.0;
  for (const auto& a : m.atoms()) total += atom_mass(a);
  std::vector<spectra::Peak> peaks;
  peaks.push_back({total + kProton, 5.0 + 100.0 * (1.0 - ce)});

  const auto bonds = m.bonds();
  std::vector<int> side(m.atom_count());
  for (std::size_t e = 0; e < bonds.size(); ++e) {
    std::fill(side.begin(), side.end(), 0);
    std::vector<std::size_t> stack = {bonds[e].a};
    side[bonds[e].a] = 1;
    while (!stack.empty()) {
      const std::size_t u = stack.back();
      stack.pop_back();
      for (const auto& nb : m.neighbors(u))
        if (nb.bond != e && !side[nb.atom]) {
          side[nb.atom] = 1;
          stack.push_back(nb.atom);
        }
    }
    if (side[bonds[e].b]) continue;  // ring bond: cutting it leaves one piece
    double mass_a = 0.0;
    for (std::size_t i = 0; i < m.atom_count(); ++i)
      if (side[i]) mass_a += atom_mass(m.atom(i));
    const bool hetero = m.atom(bonds[e].a).element != "C" || m.atom(bonds[e].b).element != "C";
    for (double frag : {mass_a, total - mass_a}) {
      const double r = frag / total - (1.0 - ce);
      const double intensity = 100.0 * std::exp(-r * r / 0.08) * (hetero ? 1.5 : 1.0);
      peaks.push_back({frag + kProton, intensity});
    }
  }
  return peaks;
}

SynthData generate_synthetic(const SynthConfig& config) {
  if (config.min_heavy < 2 || config.max_heavy < config.min_heavy)
    throw Error(ErrorCode::InvalidArgument, "invalid heavy atom range");
  if (config.spectra_per_molecule == 0 || config.per_formula == 0)
    throw Error(ErrorCode::InvalidArgument, "need at least one molecule and one spectrum per formula");
  Rng rng(Rng::derive(config.seed, 0x5e7));
  const double h = chem::find_element("H")->monoisotopic_mass;
  const double mc = chem::find_element("C")->monoisotopic_mass;
  const double mn = chem::find_element("N")->monoisotopic_mass;
  const double mo = chem::find_element("O")->monoisotopic_mass;

  std::vector<Composition> comps;
  for (int c = 2; c <= static_cast<int>(config.max_heavy); ++c)
    for (int n = 0; n <= 2; ++n)
      for (int o = 0; o <= 2; ++o) {
        const int heavy = c + n + o;
        if (heavy < static_cast<int>(config.min_heavy) || heavy > static_cast<int>(config.max_heavy)) continue;
        if (n + o == 0 || c < heavy / 2) continue;
        const int hydrogens = 2 * c + 2 + n;
        const double mz = c * mc + n * mn + o * mo + hydrogens * h + kProton;
        if (std::round(mz) >= static_cast<double>(config.bins)) continue;
        comps.push_back({c, n, o});
      }
  rng.shuffle(comps);
  if (comps.size() < config.formulas)
    throw Error(ErrorCode::InvalidArgument, "only " + std::to_string(comps.size()) +
                                                " compositions fit the heavy atom range and bin count");
  comps.resize(config.formulas);

  SynthData out;
  for (std::size_t f = 0; f < comps.size(); ++f) {
    const std::size_t want = config.per_formula + config.decoys_per_formula;
    std::set<std::string> seen;
    std::vector<std::pair<std::string, chem::Molecule>> found;
    for (std::size_t attempt = 0; attempt < want * 200 && found.size() < want; ++attempt) {
      const std::string smiles = random_tree_smiles(comps[f].atoms(), rng);
      if (smiles.empty()) continue;
      chem::Molecule m = chem::parse_smiles(smiles);
      // Round-trip through the writer as a structural sanity check.
      if (chem::canonical_signature(chem::parse_smiles(chem::render_smiles(m))) != chem::canonical_signature(m))
        continue;
      if (!seen.insert(chem::canonical_signature(m)).second) continue;
      found.emplace_back(smiles, std::move(m));
    }
    char prefix[16];
    for (std::size_t i = 0; i < found.size(); ++i) {
      auto& [smiles, m] = found[i];
      const chem::Formula formula = chem::molecular_formula(m);
      const bool in_dataset = i < config.per_formula;
      std::snprintf(prefix, sizeof prefix, in_dataset ? "syn%02zu_%04zu" : "dec%02zu_%04zu", f, i);
      const std::string id = prefix;
      m.set_source_smiles(smiles);
      out.catalog.push_back({formula.to_string(), id, smiles});
      if (!in_dataset) continue;
      for (std::size_t s = 0; s < config.spectra_per_molecule; ++s) {
        const double ce_raw = config.spectra_per_molecule == 1
                                  ? 35.0
                                  : 20.0 + 40.0 * static_cast<double>(s) /
                                               static_cast<double>(config.spectra_per_molecule - 1);
        spectra::MspRecord rec;
        rec.name = id;
        rec.precursor_type = "[M+H]+";
        rec.precursor_mz = chem::monoisotopic_mass(m) + kProton;
        char ce_text[16];
        std::snprintf(ce_text, sizeof ce_text, "%g", ce_raw);
        rec.collision_energy = ce_text;
        rec.metadata.emplace_back("Formula", formula.to_string());
        rec.metadata.emplace_back("SMILES", smiles);
        rec.peaks = synthetic_peaks(m, ce_raw / 100.0);
        std::sort(rec.peaks.begin(), rec.peaks.end(), [](const auto& a, const auto& b) { return a.mz < b.mz; });
        out.spectra.push_back(std::move(rec));
      }
      out.molecules.push_back({id, m, formula});
    }
  }
  return out;
}

ranking::CandidateCatalog to_catalog(const std::vector<CatalogRow>& rows) {
  ranking::CandidateCatalog c;
  for (const auto& r : rows) {
    chem::Molecule m = chem::parse_smiles(r.smiles);
    m.set_source_smiles(r.smiles);
    c[r.formula].push_back(ranking::make_catalog_entry(r.id, m));
  }
  return c;
}

void write_catalog(std::ostream& out, const std::vector<CatalogRow>& rows) {
  for (const auto& r : rows) out << r.formula << '\t' << r.id << '\t' << r.smiles << '\n';
}

void write_synthetic(const std::string& dir, const SynthData& data) {
  std::filesystem::create_directories(dir);
  auto open = [&](const std::string& name) {
    std::ofstream f(std::filesystem::path(dir) / name);
    if (!f) throw Error(ErrorCode::Io, "cannot write " + name + " under " + dir);
    return f;
  };
  {
    auto f = open("molecules.tsv");
    chem::write_molecule_table(f, data.molecules);
  }
  {
    auto f = open("spectra.msp");
    spectra::render_msp(f, data.spectra);
  }
  {
    auto f = open("catalog.tsv");
    write_catalog(f, data.catalog);
  }
}

}  // namespace esp::pipeline

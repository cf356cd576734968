#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "esp/chem/molecule_table.hpp"
#include "esp/ranking/ranking.hpp"
#include "esp/spectra/msp.hpp"

namespace esp::pipeline {

/// Acyclic saturated C/N/O molecules grouped by composition. Every molecule
/// with the same heavy-atom composition shares one formula, so each group
/// is a ready-made candidate set.
struct SynthConfig {
  std::size_t formulas = 10;
  std::size_t per_formula = 20;
  /// Extra isomers per formula that only appear in the candidate catalog.
  std::size_t decoys_per_formula = 0;
  std::size_t spectra_per_molecule = 2;
  std::size_t min_heavy = 7;
  std::size_t max_heavy = 10;
  std::size_t bins = 200;
  std::uint64_t seed = 0;
};

struct CatalogRow {
  std::string formula;
  std::string id;
  std::string smiles;
};

struct SynthData {
  std::vector<chem::MoleculeEntry> molecules;
  std::vector<spectra::MspRecord> spectra;
  std::vector<CatalogRow> catalog;  // dataset molecules and decoys
};

/// Ground-truth fragmentation: every bond is cut once, each side is charged
/// by a proton, and its intensity is a fixed function of the fragment's mass
/// fraction, the collision energy and whether the cut bond touches N or O.
/// The protonated precursor is added with an intensity falling with energy.
std::vector<spectra::Peak> synthetic_peaks(const chem::Molecule& m, double collision_energy);

SynthData generate_synthetic(const SynthConfig& config);

ranking::CandidateCatalog to_catalog(const std::vector<CatalogRow>& rows);
void write_catalog(std::ostream& out, const std::vector<CatalogRow>& rows);

/// molecules.tsv, spectra.msp and catalog.tsv under `dir`.
void write_synthetic(const std::string& dir, const SynthData& data);

}  // namespace esp::pipeline

#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "esp/chem/fingerprint.hpp"
#include "esp/chem/formula.hpp"
#include "esp/chem/molecule.hpp"
#include "esp/chem/molecule_table.hpp"
#include "esp/spectra/msp.hpp"
#include "esp/spectra/spectrum.hpp"

namespace esp::pipeline {

enum class Split { Unassigned, Train, Val, Test };
std::string to_string(Split s);
Split parse_split(const std::string& text);

struct NamedSpectrum {
  std::string name;
  spectra::BinnedSpectrum spectrum;  // carries precursor m/z and instrument
};

struct MoleculeRecord {
  std::string id;
  std::string smiles;
  chem::Molecule molecule;
  chem::Formula formula;
  std::vector<NamedSpectrum> spectra;
  Split split = Split::Unassigned;
};

struct Dataset {
  std::size_t bins = spectra::kDefaultBins;
  std::vector<MoleculeRecord> records;

  std::size_t spectrum_count() const;
  /// Record indices in the given split, in dataset order.
  std::vector<std::size_t> indices(Split s) const;
  /// Index of a molecule id, or npos.
  std::size_t find(const std::string& id) const;
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
};

/// Joins MSP records to molecules by `Name` (falling back to an `ID`
/// metadata field). Unmatched records, records whose precursor bin falls
/// outside [0, bins) and molecules without spectra are skipped with a note
/// in `warnings`. Spectra keep their raw binned intensities.
Dataset ingest(const std::vector<spectra::MspRecord>& msp, const std::vector<chem::MoleculeEntry>& molecules,
               std::size_t bins = spectra::kDefaultBins, std::vector<std::string>* warnings = nullptr);

/// JSON with sparse spectra. Reading validates SMILES against the stored
/// formula and throws MalformedRecord on structural problems.
void save_dataset(std::ostream& out, const Dataset& d);
Dataset load_dataset(std::istream& in);
void save_dataset_file(const std::string& path, const Dataset& d);
Dataset load_dataset_file(const std::string& path);

/// Molecules with more than `max_n` spectra get `max_n` draws with
/// replacement; the rest keep everything. Returns the drawn source indices
/// per record when `drawn` is given.
Dataset sample_spectra(const Dataset& d, std::size_t max_n, std::uint64_t seed,
                       std::vector<std::vector<std::size_t>>* drawn = nullptr);

/// Shuffle ids and cut 8:1:1 (floor on train and val, remainder to test).
std::map<std::string, Split> split_random(const std::vector<std::string>& ids, std::uint64_t seed,
                                          double train = 0.8, double val = 0.1);

struct ClusterSplit {
  std::map<std::string, Split> split;
  /// Cluster membership as indices into the input, largest cluster first.
  std::vector<std::vector<std::size_t>> clusters;
};

/// UPGMA on 1 - Tanimoto cut at `n_clusters`. The `train_clusters` largest
/// clusters go to training (with a random 1/9 of those molecules moved to
/// validation), the rest to test. Throws FewerMoleculesThanClusters.
ClusterSplit split_realistic(const std::vector<std::string>& ids, const std::vector<chem::Fingerprint>& fps,
                             std::size_t n_clusters = 50, std::size_t train_clusters = 29,
                             std::uint64_t seed = 0);

/// Average-linkage agglomerative clustering down to `k` clusters. Ties in
/// the closest pair are broken by lowest cluster index. Clusters are sorted
/// by size descending, then by smallest member.
std::vector<std::vector<std::size_t>> upgma(const std::vector<double>& distance, std::size_t n, std::size_t k);

void apply_split(Dataset& d, const std::map<std::string, Split>& split);

}  // namespace esp::pipeline

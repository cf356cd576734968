#include "esp/pipeline/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "esp/common/error.hpp"
#include "esp/common/rng.hpp"
#include "esp/chem/smiles.hpp"
#include "json.hpp"

namespace esp::pipeline {

using nlohmann::json;

std::string to_string(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
    case Split::Unassigned: break;
  }
  return "unassigned";
}

Split parse_split(const std::string& text) {
  if (text == "train") return Split::Train;
  if (text == "val") return Split::Val;
  if (text == "test") return Split::Test;
  if (text == "unassigned" || text.empty()) return Split::Unassigned;
  throw Error(ErrorCode::InvalidArgument, "unknown split '" + text + "'");
}

std::size_t Dataset::spectrum_count() const {
  std::size_t n = 0;
  for (const auto& r : records) n += r.spectra.size();
  return n;
}

std::vector<std::size_t> Dataset::indices(Split s) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < records.size(); ++i)
    if (records[i].split == s) out.push_back(i);
  return out;
}

std::size_t Dataset::find(const std::string& id) const {
  for (std::size_t i = 0; i < records.size(); ++i)
    if (records[i].id == id) return i;
  return npos;
}

Dataset ingest(const std::vector<spectra::MspRecord>& msp, const std::vector<chem::MoleculeEntry>& molecules,
               std::size_t bins, std::vector<std::string>* warnings) {
  auto warn = [&](std::string w) {
    if (warnings) warnings->push_back(std::move(w));
  };
  Dataset d;
  d.bins = bins;
  std::map<std::string, std::size_t> by_id;
  for (const auto& m : molecules) {
    if (by_id.count(m.id)) {
      warn("duplicate molecule id " + m.id + "; keeping the first");
      continue;
    }
    by_id[m.id] = d.records.size();
    MoleculeRecord r;
    r.id = m.id;
    r.smiles = m.molecule.source_smiles().empty() ? chem::render_smiles(m.molecule) : m.molecule.source_smiles();
    r.molecule = m.molecule;
    r.formula = m.formula;
    d.records.push_back(std::move(r));
  }

  for (const auto& rec : msp) {
    auto it = by_id.find(rec.name);
    if (it == by_id.end())
      if (auto alt = rec.find("ID")) it = by_id.find(*alt);
    if (it == by_id.end()) {
      warn("spectrum '" + rec.name + "' has no matching molecule");
      continue;
    }
    MoleculeRecord& r = d.records[it->second];
    const auto instrument = rec.instrument();
    const double mz = rec.precursor_mz ? *rec.precursor_mz
                                       : spectra::precursor_mz(chem::monoisotopic_mass(r.molecule),
                                                               instrument.precursor_type());
    const double pm = std::round(mz);
    if (!(pm >= 0.0 && pm < static_cast<double>(bins))) {
      warn("spectrum '" + rec.name + "' precursor m/z outside the binned range");
      continue;
    }
    spectra::BinningStats stats;
    NamedSpectrum s{rec.name, spectra::bin_peaks(rec.peaks, bins, &stats)};
    s.spectrum.precursor_mz = mz;
    s.spectrum.instrument = instrument;
    if (stats.dropped) warn("spectrum '" + rec.name + "': dropped " + std::to_string(stats.dropped) + " peaks above range");
    r.spectra.push_back(std::move(s));
  }

  std::vector<MoleculeRecord> kept;
  for (auto& r : d.records) {
    if (r.spectra.empty()) {
      warn("molecule " + r.id + " has no spectra");
      continue;
    }
    kept.push_back(std::move(r));
  }
  d.records = std::move(kept);
  return d;
}

void save_dataset(std::ostream& out, const Dataset& d) {
  json j;
  j["format"] = "esp-dataset";
  j["version"] = 1;
  j["bins"] = d.bins;
  json mols = json::array();
  for (const auto& r : d.records) {
    json m;
    m["id"] = r.id;
    m["smiles"] = r.smiles;
    m["formula"] = r.formula.to_string();
    m["split"] = to_string(r.split);
    json specs = json::array();
    for (const auto& s : r.spectra) {
      json peaks = json::array();
      for (std::size_t b = 0; b < s.spectrum.intensities.size(); ++b)
        if (s.spectrum.intensities[b] != 0.0) peaks.push_back({b, s.spectrum.intensities[b]});
      specs.push_back({{"name", s.name},
                       {"precursor_type", s.spectrum.instrument.precursor_type()},
                       {"collision_energy", s.spectrum.instrument.collision_energy()},
                       {"precursor_mz", s.spectrum.precursor_mz},
                       {"peaks", std::move(peaks)}});
    }
    m["spectra"] = std::move(specs);
    mols.push_back(std::move(m));
  }
  j["molecules"] = std::move(mols);
  out << j.dump(1) << "\n";
}

Dataset load_dataset(std::istream& in) {
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedRecord, std::string("dataset is not valid JSON: ") + e.what());
  }
  try {
    if (j.value("format", "") != "esp-dataset") throw Error(ErrorCode::MalformedRecord, "not a dataset file");
    Dataset d;
    d.bins = j.at("bins").get<std::size_t>();
    for (const auto& m : j.at("molecules")) {
      MoleculeRecord r;
      r.id = m.at("id").get<std::string>();
      r.smiles = m.at("smiles").get<std::string>();
      r.molecule = chem::parse_smiles(r.smiles);
      r.formula = chem::molecular_formula(r.molecule);
      if (m.contains("formula") && m["formula"].get<std::string>() != r.formula.to_string())
        throw Error(ErrorCode::FormulaMismatch, "molecule " + r.id + " formula disagrees with its SMILES");
      r.split = parse_split(m.value("split", ""));
      for (const auto& s : m.at("spectra")) {
        NamedSpectrum ns;
        ns.name = s.at("name").get<std::string>();
        ns.spectrum.intensities.assign(d.bins, 0.0);
        for (const auto& p : s.at("peaks")) {
          const auto b = p.at(0).get<std::size_t>();
          if (b >= d.bins) throw Error(ErrorCode::MalformedRecord, "peak bin out of range in " + ns.name);
          ns.spectrum.intensities[b] = p.at(1).get<double>();
        }
        ns.spectrum.precursor_mz = s.at("precursor_mz").get<double>();
        ns.spectrum.instrument = spectra::InstrumentSetting::from_normalized(
            s.at("precursor_type").get<std::string>(), s.at("collision_energy").get<double>());
        r.spectra.push_back(std::move(ns));
      }
      d.records.push_back(std::move(r));
    }
    return d;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedRecord, std::string("dataset structure: ") + e.what());
  }
}

void save_dataset_file(const std::string& path, const Dataset& d) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path);
  save_dataset(out, d);
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path);
}

Dataset load_dataset_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  return load_dataset(in);
}

Dataset sample_spectra(const Dataset& d, std::size_t max_n, std::uint64_t seed,
                       std::vector<std::vector<std::size_t>>* drawn) {
  Dataset out;
  out.bins = d.bins;
  if (drawn) drawn->clear();
  for (std::size_t i = 0; i < d.records.size(); ++i) {
    const auto& r = d.records[i];
    MoleculeRecord copy = r;
    std::vector<std::size_t> idx;
    if (r.spectra.size() > max_n) {
      Rng rng(Rng::derive(seed, i));
      copy.spectra.clear();
      for (std::size_t k = 0; k < max_n; ++k) {
        const auto pick = static_cast<std::size_t>(rng.below(r.spectra.size()));
        idx.push_back(pick);
        copy.spectra.push_back(r.spectra[pick]);
      }
    } else {
      idx.resize(r.spectra.size());
      std::iota(idx.begin(), idx.end(), 0);
    }
    if (drawn) drawn->push_back(std::move(idx));
    out.records.push_back(std::move(copy));
  }
  return out;
}

std::map<std::string, Split> split_random(const std::vector<std::string>& ids, std::uint64_t seed, double train,
                                          double val) {
  if (train < 0 || val < 0 || train + val > 1.0)
    throw Error(ErrorCode::InvalidArgument, "split ratios must be non-negative and sum to at most 1");
  std::vector<std::string> order = ids;
  std::sort(order.begin(), order.end());
  if (std::adjacent_find(order.begin(), order.end()) != order.end())
    throw Error(ErrorCode::InvalidArgument, "duplicate molecule id in split");
  Rng rng(Rng::derive(seed, 0x5917));
  rng.shuffle(order);
  const auto n = order.size();
  const auto n_train = static_cast<std::size_t>(std::floor(train * static_cast<double>(n) + 1e-9));
  const auto n_val = static_cast<std::size_t>(std::floor(val * static_cast<double>(n) + 1e-9));
  std::map<std::string, Split> out;
  for (std::size_t i = 0; i < n; ++i)
    out[order[i]] = i < n_train ? Split::Train : (i < n_train + n_val ? Split::Val : Split::Test);
  return out;
}

std::vector<std::vector<std::size_t>> upgma(const std::vector<double>& distance, std::size_t n, std::size_t k) {
  if (distance.size() != n * n) throw Error(ErrorCode::DimensionMismatch, "distance matrix must be n x n");
  if (k == 0 || n < k)
    throw Error(ErrorCode::FewerMoleculesThanClusters,
                std::to_string(n) + " molecules cannot form " + std::to_string(k) + " clusters");
  std::vector<double> dist = distance;
  std::vector<std::vector<std::size_t>> members(n);
  for (std::size_t i = 0; i < n; ++i) members[i] = {i};
  std::vector<bool> active(n, true);
  std::vector<std::size_t> nearest(n, 0);
  std::vector<double> nearest_d(n, std::numeric_limits<double>::infinity());

  auto refresh = [&](std::size_t i) {
    nearest_d[i] = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j)
      if (j != i && active[j] && dist[i * n + j] < nearest_d[i]) {
        nearest_d[i] = dist[i * n + j];
        nearest[i] = j;
      }
  };
  for (std::size_t i = 0; i < n; ++i) refresh(i);

  for (std::size_t count = n; count > k; --count) {
    std::size_t a = n;
    for (std::size_t i = 0; i < n; ++i)
      if (active[i] && (a == n || nearest_d[i] < nearest_d[a])) a = i;
    std::size_t b = nearest[a];
    if (b < a) std::swap(a, b);
    const double na = static_cast<double>(members[a].size());
    const double nb = static_cast<double>(members[b].size());
    for (std::size_t j = 0; j < n; ++j) {
      if (!active[j] || j == a || j == b) continue;
      const double merged = (na * dist[a * n + j] + nb * dist[b * n + j]) / (na + nb);
      dist[a * n + j] = dist[j * n + a] = merged;
    }
    members[a].insert(members[a].end(), members[b].begin(), members[b].end());
    members[b].clear();
    active[b] = false;
    // Average linkage never brings a merged cluster closer than both parts,
    // so only rows that pointed at a or b need a rescan.
    for (std::size_t j = 0; j < n; ++j)
      if (active[j] && (j == a || nearest[j] == a || nearest[j] == b)) refresh(j);
  }

  std::vector<std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < n; ++i)
    if (active[i]) {
      std::sort(members[i].begin(), members[i].end());
      out.push_back(std::move(members[i]));
    }
  std::stable_sort(out.begin(), out.end(), [](const auto& x, const auto& y) {
    if (x.size() != y.size()) return x.size() > y.size();
    return x.front() < y.front();
  });
  return out;
}

ClusterSplit split_realistic(const std::vector<std::string>& ids, const std::vector<chem::Fingerprint>& fps,
                             std::size_t n_clusters, std::size_t train_clusters, std::uint64_t seed) {
  if (ids.size() != fps.size()) throw Error(ErrorCode::DimensionMismatch, "one fingerprint per molecule required");
  if (train_clusters > n_clusters)
    throw Error(ErrorCode::InvalidArgument, "train clusters exceed the cluster count");
  const std::size_t n = ids.size();
  if (n < n_clusters)
    throw Error(ErrorCode::FewerMoleculesThanClusters,
                std::to_string(n) + " molecules cannot form " + std::to_string(n_clusters) + " clusters");
  std::vector<double> dist(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) dist[i * n + j] = dist[j * n + i] = 1.0 - chem::tanimoto(fps[i], fps[j]);

  ClusterSplit out;
  out.clusters = upgma(dist, n, n_clusters);
  std::vector<std::size_t> train;
  for (std::size_t c = 0; c < out.clusters.size(); ++c)
    for (std::size_t i : out.clusters[c]) {
      if (c < train_clusters)
        train.push_back(i);
      else
        out.split[ids[i]] = Split::Test;
    }
  std::sort(train.begin(), train.end());
  Rng rng(Rng::derive(seed, 0x7a1));
  rng.shuffle(train);
  const std::size_t n_val = train.size() / 9;
  for (std::size_t p = 0; p < train.size(); ++p) out.split[ids[train[p]]] = p < n_val ? Split::Val : Split::Train;
  return out;
}

void apply_split(Dataset& d, const std::map<std::string, Split>& split) {
  for (auto& r : d.records) {
    auto it = split.find(r.id);
    r.split = it == split.end() ? Split::Unassigned : it->second;
  }
}

}  // namespace esp::pipeline

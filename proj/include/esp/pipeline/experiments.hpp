#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "esp/ensemble/ensemble.hpp"
#include "esp/model/spectrum_model.hpp"
#include "esp/pipeline/checkpoint.hpp"
#include "esp/pipeline/config.hpp"
#include "esp/pipeline/dataset.hpp"
#include "esp/ranking/ranking.hpp"

namespace esp::pipeline {

/// Memoised predictions of one model, keyed by molecule address, instrument
/// and precursor bin. Fingerprints are computed on demand with the model's
/// own settings. Not thread-safe; use one per worker.
class PredictionCache {
 public:
  explicit PredictionCache(const model::SpectrumModel& m) : model_(m) {}
  const std::vector<double>& get(const chem::Molecule& mol, const spectra::BinnedSpectrum& query);
  const model::SpectrumModel& model() const { return model_; }

 private:
  const model::SpectrumModel& model_;
  std::map<const chem::Molecule*, chem::Fingerprint> fingerprints_;
  std::map<std::pair<const chem::Molecule*, std::string>, std::vector<double>> predictions_;
};

struct EnsembleData {
  std::vector<ensemble::EnsembleExample> examples;
  std::vector<ensemble::RankingQuery> validation;
};

/// Training examples come from training spectra ranked among training
/// molecules of the same formula; validation queries from validation
/// spectra ranked among all dataset molecules of the same formula.
/// Formula groups with a single molecule are left out.
EnsembleData build_ensemble_data(const Dataset& d, const model::SpectrumModel& mlp,
                                 const model::SpectrumModel& gnn, bool sqrt_intensity = false);

/// Keys: ens_hidden, ens_layers, ens_dropout, ens_epochs, ens_patience,
/// ens_batch_size, ens_lr, ens_weight_decay, ens_hard_blend, seed, bins.
/// Keys of other stages are ignored.
ensemble::ClassifierConfig classifier_config_from(const Config& c);
Config to_config(const ensemble::ClassifierConfig& c);

Checkpoint ensemble_checkpoint(const ensemble::EnsembleClassifier& classifier, ensemble::LabelSource source,
                               ensemble::Weighting weighting, const ensemble::EnsembleTrainingLog& log);
std::unique_ptr<ensemble::EnsembleClassifier> load_ensemble(const Checkpoint& ckpt);

enum class ExperimentKind { CandSize, CandSimilarity, Realistic, FullPositive };
ExperimentKind parse_experiment_kind(const std::string& text);
std::string to_string(ExperimentKind k);

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::CandSize;
  std::vector<std::size_t> sizes = {50, 100, 250, 1000};
  std::size_t default_size = 100;
  std::size_t max_k = 20;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  Split split = Split::Test;
  bool sqrt_intensity = false;
};

struct QueryRank {
  std::string condition;
  std::string query_id;
  std::string model;
  std::size_t candidates = 0;
  double rank = 0.0;
};

struct ExperimentReport {
  std::string experiment;
  std::vector<std::string> conditions;  // in evaluation order
  std::vector<std::string> models;
  std::vector<QueryRank> ranks;
  std::size_t skipped_queries = 0;      // no other candidate in the catalog
};

struct Predictors {
  const model::SpectrumModel* mlp = nullptr;
  const model::SpectrumModel* gnn = nullptr;
  const ensemble::EnsembleClassifier* ensemble = nullptr;  // ESP rows need all three
};

/// Every spectrum of the chosen split is a query. Candidates are drawn from
/// the catalog entries sharing the target's formula with a per-query seed,
/// so the random sets for different sizes are nested.
ExperimentReport run_experiment(const Dataset& d, const ranking::CandidateCatalog& catalog, const Predictors& p,
                                const ExperimentConfig& config);

/// Catalog built from the dataset's own molecules.
ranking::CandidateCatalog dataset_catalog(const Dataset& d);

/// experiment, condition, model, queries, average_rank, rank_at_1..rank_at_K.
void write_summary(std::ostream& out, const ExperimentReport& r, std::size_t max_k = 20);
/// experiment, condition, model, k, rank_at_k.
void write_long_table(std::ostream& out, const ExperimentReport& r, std::size_t max_k = 20);
/// experiment, condition, query_id, model, candidates, rank.
void write_query_ranks(std::ostream& out, const ExperimentReport& r);

/// ESP_THREADS when set to a positive integer, else 1.
std::size_t threads_from_env();

}  // namespace esp::pipeline

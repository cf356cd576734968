#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "esp/model/spectrum_model.hpp"
#include "esp/nn/adam.hpp"
#include "esp/pipeline/checkpoint.hpp"
#include "esp/pipeline/config.hpp"
#include "esp/pipeline/dataset.hpp"
#include "esp/topics/lda.hpp"

namespace esp::pipeline {

struct TrainConfig {
  model::ModelConfig model;
  std::size_t epochs = 200;
  std::size_t batch_size = 64;
  nn::AdamConfig adam{};
  std::uint64_t seed = 0;
  /// Stop when validation rank has not improved for this many epochs; 0 disables.
  std::size_t patience = 0;
  bool sqrt_intensity = false;
  /// Peak-count scale used to turn spectra into LDA documents.
  int lda_quantization = 20;
  std::size_t lda_iterations = 200;
};

/// Recognised keys: model, bins, fp_bits, fp_radius, hidden, gnn_layers,
/// bidirectional, attention, attention_heads, attention_rank, theta, aux,
/// topics, lambda, dropout, epochs, batch_size, lr, weight_decay, seed,
/// patience, sqrt_intensity, lda_quantization, lda_iterations. Unknown keys
/// throw BadConfig.
TrainConfig train_config_from(const Config& c);
Config to_config(const TrainConfig& t);

struct TrainHistory {
  std::vector<double> train_loss;      // mean total loss per epoch
  std::vector<double> train_spectral;  // mean 1 - cos per epoch
  std::vector<double> val_average_rank;  // NaN without stratified validation queries
  std::size_t best_epoch = 0;            // 1-based; 0 before the first epoch
  double best_val_rank = 0.0;
  double best_train_loss = 0.0;
};

/// One training spectrum with its model input and targets.
struct TrainExample {
  std::size_t record = 0;
  std::size_t spectrum = 0;
  model::ModelInput input;
  std::vector<double> target;        // L2-normalised
  std::vector<double> topic_target;  // empty without the aux head
};

/// Formula-stratified ranking query over dataset molecules.
struct ValidationQuery {
  std::size_t record = 0;
  std::size_t spectrum = 0;
  std::vector<std::size_t> candidates;  // record indices, target included
  std::size_t target = 0;                // position in candidates
};

/// Queries for every spectrum in `split` whose formula group (over all
/// dataset molecules, or only those in `pool_split` when given) has at least
/// two members.
std::vector<ValidationQuery> stratified_queries(const Dataset& d, Split split,
                                                const std::vector<Split>& pool_splits = {});

/// Training target for a spectrum: optional sqrt, then L2 normalisation.
std::vector<double> target_vector(const spectra::BinnedSpectrum& s, bool sqrt_intensity);

/// Jointly trains encoder, prediction head, attention and topic head on the
/// training split; keeps the parameters with the best validation average
/// rank (ties broken by lower training loss).
class Trainer {
 public:
  Trainer(const Dataset& data, const TrainConfig& config);
  /// Continue from a checkpoint written by checkpoint(); the dataset must be
  /// the one the run started with.
  static std::unique_ptr<Trainer> resume(const Dataset& data, const Checkpoint& ckpt);

  /// Train until `epochs` epochs are complete (config().epochs by default) or
  /// patience runs out. Throws DivergedLoss on a non-finite loss.
  void run(std::size_t epochs = 0, const std::function<void(const Trainer&)>& on_epoch = {});
  bool stopped() const { return stopped_; }

  std::size_t epoch() const { return epoch_; }
  const TrainConfig& config() const { return config_; }
  const TrainHistory& history() const { return history_; }
  const model::SpectrumModel& model() const { return *model_; }
  const topics::TopicModel* topic_model() const { return topics_ ? &*topics_ : nullptr; }
  const std::vector<TrainExample>& examples() const { return examples_; }

  Checkpoint checkpoint() const;

  /// Mean 1 - cos over the training examples with the current parameters.
  double evaluate_spectral_loss() const;
  double validation_rank() const;

 private:
  Trainer(const Dataset& data, const TrainConfig& config, const Checkpoint* ckpt);
  void prepare(const Checkpoint* ckpt);
  double train_epoch();

  const Dataset& data_;
  TrainConfig config_;
  std::vector<chem::Fingerprint> fingerprints_;
  std::unique_ptr<model::SpectrumModel> model_;
  std::optional<topics::TopicModel> topics_;
  nn::AdamState adam_;
  std::vector<std::vector<double>> best_;
  std::vector<TrainExample> examples_;
  std::vector<ValidationQuery> validation_;
  TrainHistory history_;
  std::size_t epoch_ = 0;
  std::size_t since_best_ = 0;
  bool stopped_ = false;
};

/// The trained predictor in a checkpoint (best parameters by default).
std::unique_ptr<model::SpectrumModel> load_model(const Checkpoint& ckpt, bool best = true);

std::vector<double> predict_for(const model::SpectrumModel& m, const chem::Molecule& mol,
                                const chem::Fingerprint* fp, const spectra::BinnedSpectrum& query);

/// Fingerprint for a model's MLP input.
chem::Fingerprint model_fingerprint(const model::ModelConfig& c, const chem::Molecule& m);

}  // namespace esp::pipeline

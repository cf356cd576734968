#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "esp/nn/adam.hpp"
#include "esp/nn/layers.hpp"
#include "esp/ranking/ranking.hpp"

namespace esp::ensemble {

struct Label {
  int d_mlp = 1;
  int d_gnn = 0;
};

/// d_mlp = 1 when rank_mlp <= rank_gnn (ties go to the fingerprint model).
Label make_label(double rank_mlp, double rank_gnn);

/// |rank_gnn - rank_mlp| / (rank_gnn + rank_mlp).
double smape_weight(double rank_mlp, double rank_gnn);

enum class LabelSource { Rank, Loss };
enum class Weighting { Smape, Uniform };
LabelSource parse_label_source(const std::string& text);
Weighting parse_weighting(const std::string& text);
std::string to_string(LabelSource s);
std::string to_string(Weighting w);

struct EnsembleExample {
  std::string query_id;
  std::vector<double> query;
  double rank_mlp = 1.0;
  double rank_gnn = 1.0;
  /// Spectral losses of the two predictors on the query's own molecule.
  double loss_mlp = 0.0;
  double loss_gnn = 0.0;
  int d_mlp = 1;
  double gamma = 0.0;
};

/// Fill d_mlp and gamma. Rank labels use make_label and SMAPE; loss labels
/// pick the smaller spectral loss and weight by |loss_mlp - loss_gnn|.
/// Uniform weighting sets gamma = 1 for every example.
void assign_labels(std::vector<EnsembleExample>& examples, LabelSource source, Weighting weighting);

struct ClassifierConfig {
  std::size_t bins = 1000;
  std::size_t hidden = 512;
  std::size_t layers = 2;
  double dropout = 0.0;
  bool normalize_input = true;
  std::size_t max_epochs = 200;
  std::size_t patience = 20;
  std::size_t batch_size = 64;
  nn::AdamConfig adam{};
  std::uint64_t seed = 0;
  bool hard_blend = false;
};

/// Feedforward network on the query spectrum with a sigmoid output d_hat_mlp.
class EnsembleClassifier {
 public:
  EnsembleClassifier(const ClassifierConfig& config, std::uint64_t seed);

  const ClassifierConfig& config() const { return config_; }
  nn::ParameterSet& params() { return params_; }
  const nn::ParameterSet& params() const { return params_; }

  nn::Var forward(nn::Tape& tape, std::span<const double> query, Rng* dropout_rng = nullptr) const;
  double predict(std::span<const double> query) const;

 private:
  std::vector<double> prepare(std::span<const double> query) const;

  ClassifierConfig config_;
  nn::ParameterSet params_;
  std::vector<nn::Dense> layers_;
};

/// d * mlp + (1 - d) * gnn elementwise.
std::vector<double> blend(double d_mlp, std::span<const double> mlp, std::span<const double> gnn);

/// Candidate predictions of both models for one query.
struct RankingQuery {
  std::string query_id;
  std::vector<double> query;
  std::vector<std::vector<double>> mlp;
  std::vector<std::vector<double>> gnn;
  std::size_t target = 0;
};

/// Rank with a fixed blend weight (thresholded at 0.5 when `hard`).
ranking::RankResult esp_rank(const RankingQuery& q, double d_mlp, bool hard = false);
/// d_hat from the classifier on the query, or `clamp` when given.
ranking::RankResult esp_rank(const RankingQuery& q, const EnsembleClassifier& classifier,
                             std::optional<double> clamp = std::nullopt);

struct EnsembleTrainingLog {
  std::vector<double> train_loss;
  std::vector<double> val_average_rank;
  std::size_t best_epoch = 0;
  std::size_t informative = 0;
};

/// Minimises sum gamma_i BCE(d_hat_i, d_i) with Adam and keeps the epoch with
/// the best validation average rank of the blended predictor. Throws
/// NoInformativeExamples when every gamma is 0.
EnsembleClassifier train_ensemble(const std::vector<EnsembleExample>& examples,
                                  const std::vector<RankingQuery>& validation, const ClassifierConfig& config,
                                  EnsembleTrainingLog* log = nullptr);

/// `query_id rank_mlp rank_gnn d gamma` per example, tab separated, with header.
void write_training_report(std::ostream& out, const std::vector<EnsembleExample>& examples);

}  // namespace esp::ensemble

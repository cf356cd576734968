#include "esp/ensemble/ensemble.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>

#include "esp/common/error.hpp"
#include "esp/common/rng.hpp"

namespace esp::ensemble {

using nn::Tape;
using nn::Var;

Label make_label(double rank_mlp, double rank_gnn) {
  if (rank_mlp <= rank_gnn) return {1, 0};
  return {0, 1};
}

double smape_weight(double rank_mlp, double rank_gnn) {
  const double s = rank_mlp + rank_gnn;
  if (s <= 0) throw Error(ErrorCode::InvalidArgument, "ranks must be positive");
  return std::abs(rank_gnn - rank_mlp) / s;
}

LabelSource parse_label_source(const std::string& text) {
  if (text == "rank") return LabelSource::Rank;
  if (text == "loss") return LabelSource::Loss;
  throw Error(ErrorCode::BadConfig, "unknown label source '" + text + "'");
}

Weighting parse_weighting(const std::string& text) {
  if (text == "smape") return Weighting::Smape;
  if (text == "uniform") return Weighting::Uniform;
  throw Error(ErrorCode::BadConfig, "unknown weighting '" + text + "'");
}

std::string to_string(LabelSource s) { return s == LabelSource::Rank ? "rank" : "loss"; }
std::string to_string(Weighting w) { return w == Weighting::Smape ? "smape" : "uniform"; }

void assign_labels(std::vector<EnsembleExample>& examples, LabelSource source, Weighting weighting) {
  for (auto& e : examples) {
    if (source == LabelSource::Rank) {
      e.d_mlp = make_label(e.rank_mlp, e.rank_gnn).d_mlp;
      e.gamma = smape_weight(e.rank_mlp, e.rank_gnn);
    } else {
      e.d_mlp = e.loss_mlp <= e.loss_gnn ? 1 : 0;
      e.gamma = std::abs(e.loss_mlp - e.loss_gnn);
    }
    if (weighting == Weighting::Uniform) e.gamma = 1.0;
  }
}

EnsembleClassifier::EnsembleClassifier(const ClassifierConfig& config, std::uint64_t seed) : config_(config) {
  Rng rng(Rng::derive(seed, 0xe45));
  std::size_t in = config.bins;
  for (std::size_t l = 0; l < config.layers; ++l) {
    layers_.emplace_back(params_, "ens.hidden" + std::to_string(l), in, config.hidden, nn::Activation::Relu, rng);
    in = config.hidden;
  }
  layers_.emplace_back(params_, "ens.out", in, 1, nn::Activation::Sigmoid, rng);
}

std::vector<double> EnsembleClassifier::prepare(std::span<const double> query) const {
  if (query.size() != config_.bins)
    throw Error(ErrorCode::DimensionMismatch, "classifier expects " + std::to_string(config_.bins) + " bins");
  std::vector<double> x(query.begin(), query.end());
  if (config_.normalize_input) {
    double n = 0.0;
    for (double v : x) n += v * v;
    n = std::sqrt(n);
    if (n > 0)
      for (double& v : x) v /= n;
  }
  return x;
}

Var EnsembleClassifier::forward(Tape& tape, std::span<const double> query, Rng* dropout_rng) const {
  Var h = tape.row(prepare(query));
  for (std::size_t l = 0; l + 1 < layers_.size(); ++l) {
    h = layers_[l](tape, h);
    if (dropout_rng) h = tape.dropout(h, config_.dropout, *dropout_rng);
  }
  return layers_.back()(tape, h);
}

double EnsembleClassifier::predict(std::span<const double> query) const {
  std::vector<double> h = prepare(query);
  for (const auto& layer : layers_) h = layer.forward(h);
  return h[0];
}

std::vector<double> blend(double d, std::span<const double> mlp, std::span<const double> gnn) {
  if (mlp.size() != gnn.size()) throw Error(ErrorCode::DimensionMismatch, "blend inputs differ in length");
  std::vector<double> out(mlp.size());
  if (d == 1.0) return {mlp.begin(), mlp.end()};
  if (d == 0.0) return {gnn.begin(), gnn.end()};
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = d * mlp[i] + (1.0 - d) * gnn[i];
  return out;
}

ranking::RankResult esp_rank(const RankingQuery& q, double d, bool hard) {
  if (hard) d = d >= 0.5 ? 1.0 : 0.0;
  if (q.mlp.size() != q.gnn.size()) throw Error(ErrorCode::DimensionMismatch, "candidate lists differ in length");
  std::vector<std::vector<double>> blended;
  blended.reserve(q.mlp.size());
  for (std::size_t c = 0; c < q.mlp.size(); ++c) blended.push_back(blend(d, q.mlp[c], q.gnn[c]));
  return ranking::rank_candidates(q.query, blended, q.target, "esp");
}

ranking::RankResult esp_rank(const RankingQuery& q, const EnsembleClassifier& classifier,
                             std::optional<double> clamp) {
  const double d = clamp ? *clamp : classifier.predict(q.query);
  return esp_rank(q, d, classifier.config().hard_blend);
}

namespace {

double validation_rank(const EnsembleClassifier& c, const std::vector<RankingQuery>& validation) {
  std::vector<double> ranks;
  ranks.reserve(validation.size());
  for (const auto& q : validation) ranks.push_back(esp_rank(q, c).rank);
  return ranking::average_rank(ranks);
}

}  // namespace

EnsembleClassifier train_ensemble(const std::vector<EnsembleExample>& examples,
                                  const std::vector<RankingQuery>& validation, const ClassifierConfig& config,
                                  EnsembleTrainingLog* log) {
  std::vector<std::size_t> usable;
  for (std::size_t i = 0; i < examples.size(); ++i)
    if (examples[i].gamma > 0.0) usable.push_back(i);
  if (usable.empty()) throw Error(ErrorCode::NoInformativeExamples, "every example has zero weight");

  EnsembleClassifier model(config, config.seed);
  EnsembleClassifier best(config, config.seed);
  auto adam = nn::make_adam_state(model.params(), config.adam);
  EnsembleTrainingLog local;
  EnsembleTrainingLog& out = log ? *log : local;
  out = {};
  out.informative = usable.size();

  double best_rank = std::numeric_limits<double>::infinity();
  double best_loss = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;
  const std::size_t batch = std::max<std::size_t>(1, config.batch_size);
  for (std::size_t epoch = 0; epoch < config.max_epochs; ++epoch) {
    Rng rng(Rng::derive(config.seed, epoch + 1));
    std::vector<std::size_t> order = usable;
    rng.shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      model.params().zero_grad();
      for (std::size_t k = start; k < end; ++k) {
        const auto& e = examples[order[k]];
        Tape tape(true);
        Var p = model.forward(tape, e.query, config.dropout > 0 ? &rng : nullptr);
        Var loss = tape.bce(p, static_cast<double>(e.d_mlp), e.gamma);
        const double l = tape.scalar(loss);
        if (!std::isfinite(l)) throw Error(ErrorCode::DivergedLoss, "ensemble loss is not finite at epoch " + std::to_string(epoch));
        epoch_loss += l;
        tape.backward(loss);
      }
      model.params().scale_grad(1.0 / static_cast<double>(end - start));
      nn::adam_step(model.params(), adam);
    }
    epoch_loss /= static_cast<double>(order.size());
    out.train_loss.push_back(epoch_loss);

    const double vr = validation.empty() ? 0.0 : validation_rank(model, validation);
    out.val_average_rank.push_back(vr);
    const bool better = vr < best_rank || (vr == best_rank && epoch_loss < best_loss);
    if (better) {
      best_rank = vr;
      best_loss = epoch_loss;
      best.params().copy_values_from(model.params());
      out.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= config.patience && config.patience > 0) {
      break;
    }
  }
  return best;
}

void write_training_report(std::ostream& out, const std::vector<EnsembleExample>& examples) {
  out << "query_id\trank_mlp\trank_gnn\td\tgamma\n";
  char buf[64];
  for (const auto& e : examples) {
    std::snprintf(buf, sizeof buf, "%.17g", e.gamma);
    out << e.query_id << '\t' << e.rank_mlp << '\t' << e.rank_gnn << '\t' << e.d_mlp << '\t' << buf << '\n';
  }
}

}  // namespace esp::ensemble

#include "esp/model/heads.hpp"

#include <cmath>

#include "esp/common/error.hpp"
#include "esp/common/rng.hpp"
#include "esp/nn/ops.hpp"

namespace esp::model {

using nn::Activation;
using nn::Dense;
using nn::Tape;
using nn::Var;

std::size_t precursor_bin(double precursor_mz, std::size_t bins) {
  if (!(precursor_mz >= 0.0) || precursor_mz >= static_cast<double>(bins))
    throw Error(ErrorCode::PrecursorOutOfRange,
                "precursor m/z " + std::to_string(precursor_mz) + " outside [0, " + std::to_string(bins) + ")");
  return static_cast<std::size_t>(std::round(precursor_mz));
}

std::vector<double> precursor_mask(double precursor_mz, std::size_t bins) {
  const std::size_t pm = precursor_bin(precursor_mz, bins);
  std::vector<double> mask(bins, 0.0);
  for (std::size_t i = 0; i < bins && i <= pm; ++i) mask[i] = 1.0;
  return mask;
}

PredictionHead::PredictionHead(nn::ParameterSet& params, const std::string& prefix, std::size_t latent,
                               std::size_t hidden, std::size_t bins, bool bidirectional, Rng& rng)
    : bins_(bins), bidirectional_(bidirectional),
      trunk0_(params, prefix + ".trunk0", latent, hidden, Activation::Relu, rng),
      trunk1_(params, prefix + ".trunk1", hidden, hidden, Activation::Relu, rng),
      forward_(params, prefix + ".forward", hidden, bins, Activation::Identity, rng) {
  if (bidirectional_) {
    reverse_ = Dense(params, prefix + ".reverse", hidden, bins, Activation::Identity, rng);
    gate_ = Dense(params, prefix + ".gate", hidden, bins, Activation::Sigmoid, rng);
  }
}

Var PredictionHead::predict(Tape& tape, Var z, double precursor_mz, double dropout, Rng* dropout_rng) const {
  const std::size_t pm = precursor_bin(precursor_mz, bins_);
  Var h = trunk0_(tape, z);
  if (dropout_rng) h = tape.dropout(h, dropout, *dropout_rng);
  h = trunk1_(tape, h);
  if (dropout_rng) h = tape.dropout(h, dropout, *dropout_rng);
  Var y = forward_(tape, h);
  if (bidirectional_) {
    std::vector<long> source(bins_, -1);
    for (std::size_t i = 0; i <= pm && i < bins_; ++i)
      if (pm - i < bins_) source[i] = static_cast<long>(pm - i);
    Var g = gate_(tape, h);
    Var r = tape.permute_cols(reverse_(tape, h), std::move(source));
    y = tape.add(tape.mul(g, y), tape.mul(tape.affine(g, -1.0, 1.0), r));
  }
  return tape.mul_const(tape.relu(y), precursor_mask(precursor_mz, bins_));
}

AttentionHead::AttentionHead(nn::ParameterSet& params, const std::string& prefix, std::size_t bins,
                             std::size_t rank, std::size_t heads, double theta, Rng& rng)
    : bins_(bins), rank_(rank), theta_(theta) {
  if (rank >= bins) throw Error(ErrorCode::InvalidArgument, "attention rank must be below the bin count");
  if (heads == 0) throw Error(ErrorCode::InvalidArgument, "attention needs at least one head");
  if (theta < 0.0 || theta > 1.0) throw Error(ErrorCode::InvalidArgument, "theta must lie in [0, 1]");
  const double bound = std::sqrt(6.0 / static_cast<double>(bins + rank));
  for (std::size_t l = 0; l < heads; ++l) {
    nn::Parameter& d = params.create(prefix + ".D" + std::to_string(l), bins, rank);
    for (double& v : d.value) v = nn::snap_float(rng.uniform(-bound, bound));
    d_.push_back(&d);
  }
  tau_ = &params.create(prefix + ".tau", 1, heads);
}

std::vector<double> AttentionHead::head_weights() const { return nn::softmax(tau_->value); }

Var AttentionHead::co_occurrence(Tape& tape, Var y) const {
  Var tau = tape.softmax_rows(tape.parameter(*tau_));
  Var sum;
  for (std::size_t l = 0; l < d_.size(); ++l) {
    Var d = tape.parameter(*d_[l]);
    Var head = tape.scale_by(tape.matmul_bt(tape.matmul(y, d), d), tape.pick(tau, l));
    sum = sum.valid() ? tape.add(sum, head) : head;
  }
  return tape.relu(sum);
}

Var AttentionHead::update(Tape& tape, Var y) const {
  Var co = co_occurrence(tape, y);
  return tape.add(tape.scale(y, theta_), tape.scale(co, 1.0 - theta_));
}

AuxHead::AuxHead(nn::ParameterSet& params, const std::string& prefix, std::size_t latent, std::size_t hidden,
                 std::size_t topics, Rng& rng)
    : hidden_(params, prefix + ".hidden", latent, hidden, Activation::Relu, rng),
      out_(params, prefix + ".out", hidden, topics, Activation::Softmax, rng) {}

Var AuxHead::predict(Tape& tape, Var z) const { return out_(tape, hidden_(tape, z)); }

Var spectral_loss(Tape& tape, Var predicted, Var target) { return tape.scale(tape.cosine(predicted, target), -1.0); }

Var aux_loss(Tape& tape, Var r_hat, const std::vector<double>& r) { return tape.cross_entropy(r_hat, r, 1e-7); }

Var total_loss(Tape& tape, Var predicted, Var target, Var r_hat, const std::vector<double>& r, double lambda) {
  Var l = spectral_loss(tape, predicted, target);
  if (lambda == 0.0) return l;
  return tape.add(l, tape.scale(aux_loss(tape, r_hat, r), lambda));
}

double spectral_loss(const std::vector<double>& predicted, const std::vector<double>& target) {
  Tape tape(false, false);
  return tape.scalar(spectral_loss(tape, tape.row(predicted), tape.row(target)));
}

double aux_loss(const std::vector<double>& r_hat, const std::vector<double>& r) {
  Tape tape(false, false);
  return tape.scalar(aux_loss(tape, tape.row(r_hat), r));
}

}  // namespace esp::model

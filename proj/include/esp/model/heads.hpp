#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "esp/nn/layers.hpp"

namespace esp::model {

/// Bin index of the precursor: round(mz) (half away from zero). Throws
/// PrecursorOutOfRange unless 0 <= mz < bins.
std::size_t precursor_bin(double precursor_mz, std::size_t bins);

/// 1 for bins at or below the precursor bin, 0 above it.
std::vector<double> precursor_mask(double precursor_mz, std::size_t bins);

/// Two-layer relu trunk feeding a forward head, a reverse head and a per-bin
/// gate. The reverse head is read backwards from the precursor bin so that it
/// models neutral losses.
class PredictionHead {
 public:
  PredictionHead() = default;
  PredictionHead(nn::ParameterSet& params, const std::string& prefix, std::size_t latent, std::size_t hidden,
                 std::size_t bins, bool bidirectional, Rng& rng);

  std::size_t bins() const { return bins_; }
  bool bidirectional() const { return bidirectional_; }

  /// Masked, non-negative 1 x bins spectrum. `dropout_rng` may be null.
  nn::Var predict(nn::Tape& tape, nn::Var z, double precursor_mz, double dropout = 0.0,
                  Rng* dropout_rng = nullptr) const;

  nn::Dense& trunk(std::size_t i) { return i == 0 ? trunk0_ : trunk1_; }
  nn::Dense& forward_net() { return forward_; }
  nn::Dense& reverse_net() { return reverse_; }
  nn::Dense& gate_net() { return gate_; }

 private:
  std::size_t bins_ = 0;
  bool bidirectional_ = true;
  nn::Dense trunk0_;
  nn::Dense trunk1_;
  nn::Dense forward_;
  nn::Dense reverse_;
  nn::Dense gate_;
};

/// Low-rank multi-head peak co-occurrence: y_co = sum_l tau_l (y D_l) D_l^T,
/// relu-clamped, then y_update = theta y + (1 - theta) y_co.
class AttentionHead {
 public:
  AttentionHead() = default;
  AttentionHead(nn::ParameterSet& params, const std::string& prefix, std::size_t bins, std::size_t rank,
                std::size_t heads, double theta, Rng& rng);

  std::size_t heads() const { return d_.size(); }
  std::size_t rank() const { return rank_; }
  double theta() const { return theta_; }
  void set_theta(double theta) { theta_ = theta; }

  nn::Var co_occurrence(nn::Tape& tape, nn::Var y) const;
  nn::Var update(nn::Tape& tape, nn::Var y) const;

  /// softmax of the head logits.
  std::vector<double> head_weights() const;

  nn::Parameter& d(std::size_t l) { return *d_[l]; }
  nn::Parameter& tau_logits() { return *tau_; }

 private:
  std::vector<nn::Parameter*> d_;
  nn::Parameter* tau_ = nullptr;
  std::size_t bins_ = 0;
  std::size_t rank_ = 0;
  double theta_ = 0.5;
};

/// Two fully connected layers ending in a softmax over topics.
class AuxHead {
 public:
  AuxHead() = default;
  AuxHead(nn::ParameterSet& params, const std::string& prefix, std::size_t latent, std::size_t hidden,
          std::size_t topics, Rng& rng);

  std::size_t topics() const { return out_.out(); }
  nn::Var predict(nn::Tape& tape, nn::Var z) const;

 private:
  nn::Dense hidden_;
  nn::Dense out_;
};

/// -cos(predicted, target).
nn::Var spectral_loss(nn::Tape& tape, nn::Var predicted, nn::Var target);
/// -sum_t r_t log max(r_hat_t, 1e-7).
nn::Var aux_loss(nn::Tape& tape, nn::Var r_hat, const std::vector<double>& r);
nn::Var total_loss(nn::Tape& tape, nn::Var predicted, nn::Var target, nn::Var r_hat,
                   const std::vector<double>& r, double lambda);

double spectral_loss(const std::vector<double>& predicted, const std::vector<double>& target);
double aux_loss(const std::vector<double>& r_hat, const std::vector<double>& r);

}  // namespace esp::model

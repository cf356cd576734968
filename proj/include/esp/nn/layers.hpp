#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "esp/nn/parameter.hpp"
#include "esp/nn/tape.hpp"

namespace esp {
class Rng;
}

namespace esp::nn {

enum class Activation { Identity, Relu, Sigmoid, Softmax };

/// Fully connected layer y = act(W x + b). The weight is stored in x out so
/// that a row vector multiplies it directly; weight(o, i) reads it in the
/// usual out x in convention.
class Dense {
 public:
  Dense() = default;
  Dense(ParameterSet& params, const std::string& name, std::size_t in, std::size_t out,
        Activation act, Rng& rng);

  std::size_t in() const { return in_; }
  std::size_t out() const { return out_; }
  Activation activation() const { return act_; }

  /// Applies to every row of x (rows x in).
  Var operator()(Tape& tape, Var x) const;
  /// Affine part only, activation left to the caller.
  Var linear(Tape& tape, Var x) const;

  std::vector<double> forward(std::span<const double> x) const;

  double weight(std::size_t o, std::size_t i) const { return w_->value[i * out_ + o]; }
  void set_weight(std::size_t o, std::size_t i, double v) { w_->value[i * out_ + o] = v; }
  double bias(std::size_t o) const { return b_->value[o]; }
  void set_bias(std::size_t o, double v) { b_->value[o] = v; }

  Parameter& weight_param() { return *w_; }
  Parameter& bias_param() { return *b_; }

 private:
  Parameter* w_ = nullptr;
  Parameter* b_ = nullptr;
  std::size_t in_ = 0;
  std::size_t out_ = 0;
  Activation act_ = Activation::Identity;
};

Var activate(Tape& tape, Var x, Activation act);

}  // namespace esp::nn

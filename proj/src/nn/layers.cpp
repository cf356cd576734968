#include "esp/nn/layers.hpp"

#include <cmath>

#include "esp/common/error.hpp"
#include "esp/common/rng.hpp"
#include "esp/nn/ops.hpp"

namespace esp::nn {

Dense::Dense(ParameterSet& params, const std::string& name, std::size_t in, std::size_t out,
             Activation act, Rng& rng)
    : w_(&params.create(name + ".W", in, out)), b_(&params.create(name + ".b", 1, out)), in_(in),
      out_(out), act_(act) {
  if (in == 0 || out == 0) throw Error(ErrorCode::InvalidArgument, "layer " + name + " has a zero dimension");
  const double bound = act == Activation::Relu ? std::sqrt(6.0 / static_cast<double>(in))
                                               : std::sqrt(6.0 / static_cast<double>(in + out));
  for (double& w : w_->value) w = snap_float(rng.uniform(-bound, bound));
}

Var Dense::linear(Tape& tape, Var x) const {
  return tape.matmul(x, tape.parameter(*w_), tape.parameter(*b_));
}

Var Dense::operator()(Tape& tape, Var x) const { return activate(tape, linear(tape, x), act_); }

std::vector<double> Dense::forward(std::span<const double> x) const {
  if (x.size() != in_)
    throw Error(ErrorCode::DimensionMismatch,
                "layer expects " + std::to_string(in_) + " inputs, got " + std::to_string(x.size()));
  std::vector<double> y(b_->value);
  for (std::size_t i = 0; i < in_; ++i) {
    if (x[i] == 0.0) continue;
    const double* w = w_->value.data() + i * out_;
    for (std::size_t o = 0; o < out_; ++o) y[o] += x[i] * w[o];
  }
  switch (act_) {
    case Activation::Identity:
      break;
    case Activation::Relu:
      for (double& v : y) v = v > 0.0 ? v : 0.0;
      break;
    case Activation::Sigmoid:
      for (double& v : y) v = sigmoid(v);
      break;
    case Activation::Softmax:
      y = softmax(y);
      break;
  }
  return y;
}

Var activate(Tape& tape, Var x, Activation act) {
  switch (act) {
    case Activation::Identity:
      return x;
    case Activation::Relu:
      return tape.relu(x);
    case Activation::Sigmoid:
      return tape.sigmoid(x);
    case Activation::Softmax:
      return tape.softmax_rows(x);
  }
  return x;
}

}  // namespace esp::nn

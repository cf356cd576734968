#include "esp/nn/adam.hpp"

#include <cmath>

#include "esp/common/error.hpp"

namespace esp::nn {

AdamState make_adam_state(const ParameterSet& params, const AdamConfig& config) {
  AdamState s;
  s.config = config;
  for (std::size_t i = 0; i < params.count(); ++i) {
    s.m.emplace_back(params.at(i).size(), 0.0);
    s.v.emplace_back(params.at(i).size(), 0.0);
  }
  return s;
}

void adam_step(ParameterSet& params, AdamState& state) {
  if (state.m.size() != params.count())
    throw Error(ErrorCode::DimensionMismatch, "optimizer state does not match parameters");
  const AdamConfig& c = state.config;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(c.beta1, t);
  const double bc2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t k = 0; k < params.count(); ++k) {
    Parameter& p = params.at(k);
    auto& m = state.m[k];
    auto& v = state.v[k];
    if (m.size() != p.size()) throw Error(ErrorCode::DimensionMismatch, "moment shape for " + p.name());
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double g = p.grad[i];
      m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g;
      v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g * g;
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      double x = p.value[i];
      x -= c.lr * (mhat / (std::sqrt(vhat) + c.eps));
      x -= c.lr * c.weight_decay * p.value[i];
      p.value[i] = x;
      if (c.snap_float32) {
        p.value[i] = snap_float(p.value[i]);
        m[i] = snap_float(m[i]);
        v[i] = snap_float(v[i]);
      }
    }
  }
}

}  // namespace esp::nn

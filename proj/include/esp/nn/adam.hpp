#pragma once

#include <cstdint>
#include <vector>

#include "esp/nn/parameter.hpp"

namespace esp::nn {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  /// Decoupled (AdamW-style) decay applied as p -= lr * weight_decay * p.
  double weight_decay = 0.0;
  /// Keep parameters and moments representable in float32 after each step.
  bool snap_float32 = true;
};

struct AdamState {
  AdamConfig config;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  std::uint64_t step = 0;
};

AdamState make_adam_state(const ParameterSet& params, const AdamConfig& config);

/// One bias-corrected Adam update from the gradients currently held in params.
void adam_step(ParameterSet& params, AdamState& state);

}  // namespace esp::nn

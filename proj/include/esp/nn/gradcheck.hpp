#pragma once

#include <cstddef>
#include <functional>
#include <string>

#include "esp/nn/parameter.hpp"
#include "esp/nn/tape.hpp"

namespace esp::nn {

struct GradCheckReport {
  std::size_t checked = 0;
  /// Coordinates whose perturbation moved a relu/clamp across its kink.
  std::size_t skipped = 0;
  double max_rel_error = 0.0;
  std::string worst;
};

/// Compares tape gradients against central differences for every coordinate
/// of every parameter. The error for a coordinate is
/// |analytic - numeric| / max(|analytic|, |numeric|, floor).
/// `build` must be deterministic: it is replayed on fresh tapes.
GradCheckReport check_gradients(ParameterSet& params, const std::function<Var(Tape&)>& build,
                                double h = 1e-4, double floor = 1e-6, bool training = false);

}  // namespace esp::nn

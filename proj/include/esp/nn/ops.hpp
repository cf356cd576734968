#pragma once

#include <span>
#include <vector>

namespace esp {
class Rng;
}

namespace esp::nn {

double sigmoid(double x);

/// Numerically stable softmax; an empty input gives an empty output.
std::vector<double> softmax(std::span<const double> x);

/// Inverted dropout: each unit is zeroed with probability `rate`, survivors
/// are scaled by 1/(1-rate). rate must lie in [0, 1).
std::vector<double> dropout(std::span<const double> x, double rate, Rng& rng);

/// weight * binary cross entropy of p against label d, p clamped to [eps, 1-eps].
double bce(double p, double d, double weight, double eps = 1e-7);

}  // namespace esp::nn

#include "esp/nn/ops.hpp"

#include <algorithm>
#include <cmath>

#include "esp/common/error.hpp"
#include "esp/common/rng.hpp"

namespace esp::nn {

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

std::vector<double> softmax(std::span<const double> x) {
  std::vector<double> y(x.begin(), x.end());
  if (y.empty()) return y;
  const double mx = *std::max_element(y.begin(), y.end());
  double z = 0.0;
  for (double& v : y) z += (v = std::exp(v - mx));
  for (double& v : y) v /= z;
  return y;
}

std::vector<double> dropout(std::span<const double> x, double rate, Rng& rng) {
  if (rate < 0.0 || rate >= 1.0) throw Error(ErrorCode::InvalidArgument, "dropout rate must be in [0, 1)");
  std::vector<double> y(x.begin(), x.end());
  if (rate == 0.0) return y;
  const double keep = 1.0 / (1.0 - rate);
  for (double& v : y) v = rng.uniform() < rate ? 0.0 : v * keep;
  return y;
}

double bce(double p, double d, double weight, double eps) {
  if (weight == 0.0) return 0.0;
  const double pc = std::clamp(p, eps, 1.0 - eps);
  return -weight * (d * std::log(pc) + (1.0 - d) * std::log(1.0 - pc));
}

}  // namespace esp::nn

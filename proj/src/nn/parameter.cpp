#include "esp/nn/parameter.hpp"

#include <algorithm>

#include "esp/common/error.hpp"

namespace esp::nn {

Parameter& ParameterSet::create(const std::string& name, std::size_t rows, std::size_t cols) {
  if (find(name)) throw Error(ErrorCode::InvalidArgument, "duplicate parameter " + name);
  params_.push_back(std::make_unique<Parameter>(name, rows, cols));
  return *params_.back();
}

Parameter* ParameterSet::find(const std::string& name) {
  for (auto& p : params_)
    if (p->name() == name) return p.get();
  return nullptr;
}

const Parameter* ParameterSet::find(const std::string& name) const {
  for (const auto& p : params_)
    if (p->name() == name) return p.get();
  return nullptr;
}

std::size_t ParameterSet::total_size() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p->size();
  return n;
}

void ParameterSet::zero_grad() {
  for (auto& p : params_) std::fill(p->grad.begin(), p->grad.end(), 0.0);
}

void ParameterSet::scale_grad(double factor) {
  for (auto& p : params_)
    for (double& g : p->grad) g *= factor;
}

void ParameterSet::snap_to_float() {
  for (auto& p : params_)
    for (double& v : p->value) v = snap_float(v);
}

void ParameterSet::copy_values_from(const ParameterSet& other) {
  if (other.count() != count())
    throw Error(ErrorCode::DimensionMismatch, "parameter sets differ in size");
  for (std::size_t i = 0; i < count(); ++i) {
    const Parameter& src = other.at(i);
    Parameter& dst = at(i);
    if (src.name() != dst.name() || src.size() != dst.size())
      throw Error(ErrorCode::DimensionMismatch, "parameter mismatch at " + dst.name());
    dst.value = src.value;
  }
}

}  // namespace esp::nn

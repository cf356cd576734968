#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

namespace esp::nn {

/// Named row-major tensor with a gradient buffer of the same shape.
class Parameter {
 public:
  Parameter(std::string name, std::size_t rows, std::size_t cols)
      : value(rows * cols, 0.0), grad(rows * cols, 0.0), name_(std::move(name)), rows_(rows),
        cols_(cols) {}

  const std::string& name() const { return name_; }
  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return value.size(); }

  std::vector<double> value;
  std::vector<double> grad;

 private:
  std::string name_;
  std::size_t rows_;
  std::size_t cols_;
};

/// Owns parameters at stable addresses; layers keep raw pointers into it.
class ParameterSet {
 public:
  ParameterSet() = default;
  ParameterSet(const ParameterSet&) = delete;
  ParameterSet& operator=(const ParameterSet&) = delete;
  ParameterSet(ParameterSet&&) = default;
  ParameterSet& operator=(ParameterSet&&) = default;

  /// Throws InvalidArgument on a duplicate name.
  Parameter& create(const std::string& name, std::size_t rows, std::size_t cols);
  Parameter* find(const std::string& name);
  const Parameter* find(const std::string& name) const;

  std::size_t count() const { return params_.size(); }
  Parameter& at(std::size_t i) { return *params_[i]; }
  const Parameter& at(std::size_t i) const { return *params_[i]; }
  std::size_t total_size() const;

  void zero_grad();
  void scale_grad(double factor);

  /// Round every value to the nearest float32 so that 32-bit checkpoints
  /// reproduce the in-memory model exactly.
  void snap_to_float();

  /// Copy values from a set with identical names and shapes.
  void copy_values_from(const ParameterSet& other);

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
};

inline double snap_float(double v) { return static_cast<double>(static_cast<float>(v)); }

}  // namespace esp::nn

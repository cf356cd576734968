#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "esp/nn/parameter.hpp"

namespace esp {
class Rng;
}

namespace esp::nn {

/// Handle to a node on a Tape.
struct Var {
  std::size_t id = static_cast<std::size_t>(-1);
  bool valid() const { return id != static_cast<std::size_t>(-1); }
};

/// Reverse-mode differentiation over an explicit tape of row-major
/// matrices. Each operation records its output and a closure propagating the
/// output gradient to its inputs; backward() replays closures in reverse and
/// accumulates into Parameter::grad.
///
/// Non-differentiable branch points (relu sign, probability clamps, zero-norm
/// cosine) are folded into branch_signature(), which lets finite-difference
/// checks detect when a perturbation crossed a kink.
class Tape {
 public:
  /// With record_gradients off, parameters are treated as constants and no
  /// backward closures are kept; use it for inference.
  explicit Tape(bool training = false, bool record_gradients = true)
      : training_(training), record_(record_gradients) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool training() const { return training_; }

  // Leaves
  Var constant(std::size_t rows, std::size_t cols, std::vector<double> values);
  Var row(std::vector<double> values);
  Var parameter(Parameter& p);

  // Linear algebra
  /// a (r x k) * b (k x c) [+ bias (1 x c) broadcast over rows]. Zero
  /// entries of `a` are skipped, which keeps sparse fingerprint inputs cheap.
  Var matmul(Var a, Var b, Var bias = {});
  /// a (r x k) * b^T where b is (c x k).
  Var matmul_bt(Var a, Var b);

  // Elementwise
  Var add(Var a, Var b);
  Var mul(Var a, Var b);
  Var mul_const(Var a, std::vector<double> factors);
  Var scale(Var a, double s);
  Var affine(Var a, double s, double t);
  /// a (any shape) times a 1x1 node.
  Var scale_by(Var a, Var s);
  Var relu(Var a);
  Var sigmoid(Var a);
  Var softmax_rows(Var a);

  // Shape
  Var concat_cols(Var a, Var b);
  Var repeat_rows(Var a, std::size_t n);
  Var mean_rows(Var a);
  Var gather_rows(Var a, std::vector<std::size_t> index);
  /// out (out_rows x c): out[to[j]] += a[from[j]].
  Var index_add_rows(Var a, std::vector<std::size_t> from, std::vector<std::size_t> to,
                     std::size_t out_rows);
  /// Single row: out[j] = a[source[j]], or 0 where source[j] < 0.
  Var permute_cols(Var a, std::vector<long> source);
  Var pick(Var a, std::size_t index);
  Var sum(Var a);

  // Stochastic
  /// Inverted dropout; identity when rate == 0 or the tape is not training.
  Var dropout(Var a, double rate, Rng& rng);

  // Losses (all return 1x1)
  /// Cosine similarity of two rows; 0 with zero gradient when either norm is 0.
  Var cosine(Var a, Var b);
  /// -sum target_t * log(max(pred_t, clamp)).
  Var cross_entropy(Var pred, std::vector<double> target, double clamp = 1e-7);
  /// weight * BCE(p, label) with p clamped to [clamp, 1 - clamp].
  Var bce(Var p, double label, double weight, double clamp = 1e-7);

  const std::vector<double>& value(Var v) const { return data(v.id); }
  double scalar(Var v) const { return data(v.id).at(0); }
  std::size_t rows(Var v) const { return nodes_[v.id].rows; }
  std::size_t cols(Var v) const { return nodes_[v.id].cols; }
  std::size_t size() const { return nodes_.size(); }

  /// Seed d(loss)/d(loss) = 1 and propagate. `loss` must be 1x1.
  void backward(Var loss);

  std::uint64_t branch_signature() const { return signature_; }

 private:
  struct Node {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> value;
    std::vector<double> grad;
    bool needs_grad = false;
    Parameter* param = nullptr;
    std::function<void(Tape&, std::size_t)> back;
  };

  Var push(std::size_t rows, std::size_t cols, std::vector<double> value, bool needs_grad,
           std::function<void(Tape&, std::size_t)> back);
  std::vector<double>& grad(std::size_t id);
  const std::vector<double>& data(std::size_t id) const {
    const Node& n = nodes_[id];
    return n.param ? n.param->value : n.value;
  }
  bool needs(Var v) const { return nodes_[v.id].needs_grad; }
  void note_branch(bool taken);
  void require_same_shape(Var a, Var b, const char* op) const;

  bool training_;
  bool record_;
  std::vector<Node> nodes_;
  std::uint64_t signature_ = 0xcbf29ce484222325ULL;
};

}  // namespace esp::nn

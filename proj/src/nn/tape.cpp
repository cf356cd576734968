#include "esp/nn/tape.hpp"

#include <algorithm>
#include <cmath>

#include "esp/common/error.hpp"
#include "esp/common/rng.hpp"

namespace esp::nn {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw Error(ErrorCode::DimensionMismatch, what);
}

}  // namespace

Var Tape::push(std::size_t rows, std::size_t cols, std::vector<double> value, bool needs_grad,
               std::function<void(Tape&, std::size_t)> back) {
  Node n;
  n.rows = rows;
  n.cols = cols;
  n.value = std::move(value);
  n.needs_grad = needs_grad;
  if (needs_grad) n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

std::vector<double>& Tape::grad(std::size_t id) {
  Node& n = nodes_[id];
  if (n.grad.empty()) n.grad.assign(data(id).size(), 0.0);
  return n.grad;
}

void Tape::note_branch(bool taken) {
  signature_ ^= taken ? 0x9dULL : 0x3bULL;
  signature_ *= 0x100000001b3ULL;
}

void Tape::require_same_shape(Var a, Var b, const char* op) const {
  if (rows(a) != rows(b) || cols(a) != cols(b))
    throw Error(ErrorCode::DimensionMismatch, std::string(op) + ": shape mismatch");
}

Var Tape::constant(std::size_t rows, std::size_t cols, std::vector<double> values) {
  require(values.size() == rows * cols, "constant: value count does not match shape");
  return push(rows, cols, std::move(values), false, nullptr);
}

Var Tape::row(std::vector<double> values) {
  const std::size_t n = values.size();
  return constant(1, n, std::move(values));
}

Var Tape::parameter(Parameter& p) {
  Var v = push(p.rows(), p.cols(), {}, record_, [](Tape& t, std::size_t self) {
    Node& n = t.nodes_[self];
    for (std::size_t i = 0; i < n.grad.size(); ++i) n.param->grad[i] += n.grad[i];
  });
  nodes_[v.id].param = &p;
  return v;
}

Var Tape::matmul(Var a, Var b, Var bias) {
  const std::size_t r = rows(a), k = cols(a), c = cols(b);
  require(rows(b) == k, "matmul: inner dimensions differ");
  if (bias.valid()) require(rows(bias) == 1 && cols(bias) == c, "matmul: bias shape");
  std::vector<double> out(r * c, 0.0);
  const auto& av = value(a);
  const auto& bv = value(b);
  for (std::size_t i = 0; i < r; ++i) {
    double* o = out.data() + i * c;
    if (bias.valid()) std::copy_n(value(bias).data(), c, o);
    for (std::size_t p = 0; p < k; ++p) {
      const double x = av[i * k + p];
      if (x == 0.0) continue;
      const double* w = bv.data() + p * c;
      for (std::size_t j = 0; j < c; ++j) o[j] += x * w[j];
    }
  }
  const bool ng = needs(a) || needs(b) || (bias.valid() && needs(bias));
  return push(r, c, std::move(out), ng, [a, b, bias, r, k, c](Tape& t, std::size_t self) {
    const auto& g = t.nodes_[self].grad;
    const auto& av = t.data(a.id);
    const auto& bv = t.data(b.id);
    if (t.needs(a)) {
      auto& ga = t.grad(a.id);
      for (std::size_t i = 0; i < r; ++i) {
        const double* gi = g.data() + i * c;
        for (std::size_t p = 0; p < k; ++p) {
          const double* w = bv.data() + p * c;
          double s = 0.0;
          for (std::size_t j = 0; j < c; ++j) s += gi[j] * w[j];
          ga[i * k + p] += s;
        }
      }
    }
    if (t.needs(b)) {
      auto& gb = t.grad(b.id);
      for (std::size_t i = 0; i < r; ++i) {
        const double* gi = g.data() + i * c;
        for (std::size_t p = 0; p < k; ++p) {
          const double x = av[i * k + p];
          if (x == 0.0) continue;
          double* gw = gb.data() + p * c;
          for (std::size_t j = 0; j < c; ++j) gw[j] += x * gi[j];
        }
      }
    }
    if (bias.valid() && t.needs(bias)) {
      auto& gbias = t.grad(bias.id);
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) gbias[j] += g[i * c + j];
    }
  });
}

Var Tape::matmul_bt(Var a, Var b) {
  const std::size_t r = rows(a), k = cols(a), c = rows(b);
  require(cols(b) == k, "matmul_bt: inner dimensions differ");
  std::vector<double> out(r * c, 0.0);
  const auto& av = value(a);
  const auto& bv = value(b);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += av[i * k + p] * bv[j * k + p];
      out[i * c + j] = s;
    }
  return push(r, c, std::move(out), needs(a) || needs(b), [a, b, r, k, c](Tape& t, std::size_t self) {
    const auto& g = t.nodes_[self].grad;
    const auto& av = t.data(a.id);
    const auto& bv = t.data(b.id);
    if (t.needs(a)) {
      auto& ga = t.grad(a.id);
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) {
          const double gij = g[i * c + j];
          if (gij == 0.0) continue;
          for (std::size_t p = 0; p < k; ++p) ga[i * k + p] += gij * bv[j * k + p];
        }
    }
    if (t.needs(b)) {
      auto& gb = t.grad(b.id);
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) {
          const double gij = g[i * c + j];
          if (gij == 0.0) continue;
          for (std::size_t p = 0; p < k; ++p) gb[j * k + p] += gij * av[i * k + p];
        }
    }
  });
}

Var Tape::add(Var a, Var b) {
  require_same_shape(a, b, "add");
  std::vector<double> out = value(a);
  const auto& bv = value(b);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  return push(rows(a), cols(a), std::move(out), needs(a) || needs(b), [a, b](Tape& t, std::size_t self) {
    const auto& g = t.nodes_[self].grad;
    for (Var v : {a, b}) {
      if (!t.needs(v)) continue;
      auto& gv = t.grad(v.id);
      for (std::size_t i = 0; i < g.size(); ++i) gv[i] += g[i];
    }
  });
}

Var Tape::mul(Var a, Var b) {
  require_same_shape(a, b, "mul");
  std::vector<double> out = value(a);
  const auto& bv = value(b);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  return push(rows(a), cols(a), std::move(out), needs(a) || needs(b), [a, b](Tape& t, std::size_t self) {
    const auto& g = t.nodes_[self].grad;
    const auto& av = t.data(a.id);
    const auto& bv = t.data(b.id);
    if (t.needs(a)) {
      auto& ga = t.grad(a.id);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
    }
    if (t.needs(b)) {
      auto& gb = t.grad(b.id);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
    }
  });
}

Var Tape::mul_const(Var a, std::vector<double> factors) {
  require(factors.size() == value(a).size(), "mul_const: factor count");
  std::vector<double> out = value(a);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= factors[i];
  return push(rows(a), cols(a), std::move(out), needs(a),
              [a, f = std::move(factors)](Tape& t, std::size_t self) {
                const auto& g = t.nodes_[self].grad;
                auto& ga = t.grad(a.id);
                for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * f[i];
              });
}

Var Tape::scale(Var a, double s) { return affine(a, s, 0.0); }

Var Tape::affine(Var a, double s, double shift) {
  std::vector<double> out = value(a);
  for (double& x : out) x = s * x + shift;
  return push(rows(a), cols(a), std::move(out), needs(a), [a, s](Tape& t, std::size_t self) {
    const auto& g = t.nodes_[self].grad;
    auto& ga = t.grad(a.id);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += s * g[i];
  });
}

Var Tape::scale_by(Var a, Var s) {
  require(rows(s) == 1 && cols(s) == 1, "scale_by: scale must be 1x1");
  const double sv = scalar(s);
  std::vector<double> out = value(a);
  for (double& x : out) x *= sv;
  return push(rows(a), cols(a), std::move(out), needs(a) || needs(s), [a, s](Tape& t, std::size_t self) {
    const auto& g = t.nodes_[self].grad;
    const auto& av = t.data(a.id);
    const double sv = t.data(s.id)[0];
    if (t.needs(a)) {
      auto& ga = t.grad(a.id);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * sv;
    }
    if (t.needs(s)) {
      double acc = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) acc += g[i] * av[i];
      t.grad(s.id)[0] += acc;
    }
  });
}

Var Tape::relu(Var a) {
  std::vector<double> out = value(a);
  for (double& x : out) {
    note_branch(x > 0.0);
    if (!(x > 0.0)) x = 0.0;
  }
  return push(rows(a), cols(a), std::move(out), needs(a), [a](Tape& t, std::size_t self) {
    const auto& g = t.nodes_[self].grad;
    const auto& av = t.data(a.id);
    auto& ga = t.grad(a.id);
    for (std::size_t i = 0; i < g.size(); ++i)
      if (av[i] > 0.0) ga[i] += g[i];
  });
}

Var Tape::sigmoid(Var a) {
  std::vector<double> out = value(a);
  for (double& x : out) {
    if (x >= 0) {
      x = 1.0 / (1.0 + std::exp(-x));
    } else {
      const double e = std::exp(x);
      x = e / (1.0 + e);
    }
  }
  return push(rows(a), cols(a), std::move(out), needs(a), [a](Tape& t, std::size_t self) {
    const auto& g = t.nodes_[self].grad;
    const auto& y = t.nodes_[self].value;
    auto& ga = t.grad(a.id);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i] * (1.0 - y[i]);
  });
}

Var Tape::softmax_rows(Var a) {
  const std::size_t r = rows(a), c = cols(a);
  std::vector<double> out = value(a);
  for (std::size_t i = 0; i < r; ++i) {
    double* x = out.data() + i * c;
    const double mx = *std::max_element(x, x + c);
    double z = 0.0;
    for (std::size_t j = 0; j < c; ++j) z += (x[j] = std::exp(x[j] - mx));
    for (std::size_t j = 0; j < c; ++j) x[j] /= z;
  }
  return push(r, c, std::move(out), needs(a), [a, r, c](Tape& t, std::size_t self) {
    const auto& g = t.nodes_[self].grad;
    const auto& y = t.nodes_[self].value;
    auto& ga = t.grad(a.id);
    for (std::size_t i = 0; i < r; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < c; ++j) dot += g[i * c + j] * y[i * c + j];
      for (std::size_t j = 0; j < c; ++j) ga[i * c + j] += y[i * c + j] * (g[i * c + j] - dot);
    }
  });
}

Var Tape::concat_cols(Var a, Var b) {
  const std::size_t r = rows(a), ca = cols(a), cb = cols(b);
  require(rows(b) == r, "concat_cols: row counts differ");
  std::vector<double> out(r * (ca + cb));
  for (std::size_t i = 0; i < r; ++i) {
    std::copy_n(value(a).data() + i * ca, ca, out.data() + i * (ca + cb));
    std::copy_n(value(b).data() + i * cb, cb, out.data() + i * (ca + cb) + ca);
  }
  return push(r, ca + cb, std::move(out), needs(a) || needs(b), [a, b, r, ca, cb](Tape& t, std::size_t self) {
    const auto& g = t.nodes_[self].grad;
    const std::size_t c = ca + cb;
    if (t.needs(a)) {
      auto& ga = t.grad(a.id);
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < ca; ++j) ga[i * ca + j] += g[i * c + j];
    }
    if (t.needs(b)) {
      auto& gb = t.grad(b.id);
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < cb; ++j) gb[i * cb + j] += g[i * c + ca + j];
    }
  });
}

Var Tape::repeat_rows(Var a, std::size_t n) {
  require(rows(a) == 1, "repeat_rows: input must be a single row");
  const std::size_t c = cols(a);
  std::vector<double> out(n * c);
  for (std::size_t i = 0; i < n; ++i) std::copy_n(value(a).data(), c, out.data() + i * c);
  return push(n, c, std::move(out), needs(a), [a, n, c](Tape& t, std::size_t self) {
    const auto& g = t.nodes_[self].grad;
    auto& ga = t.grad(a.id);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < c; ++j) ga[j] += g[i * c + j];
  });
}

Var Tape::mean_rows(Var a) {
  const std::size_t r = rows(a), c = cols(a);
  require(r > 0, "mean_rows: no rows");
  std::vector<double> out(c, 0.0);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j] += value(a)[i * c + j];
  for (double& x : out) x /= static_cast<double>(r);
  return push(1, c, std::move(out), needs(a), [a, r, c](Tape& t, std::size_t self) {
    const auto& g = t.nodes_[self].grad;
    auto& ga = t.grad(a.id);
    const double inv = 1.0 / static_cast<double>(r);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) ga[i * c + j] += g[j] * inv;
  });
}

Var Tape::gather_rows(Var a, std::vector<std::size_t> index) {
  const std::size_t c = cols(a), n = index.size();
  std::vector<double> out(n * c);
  for (std::size_t i = 0; i < n; ++i) {
    require(index[i] < rows(a), "gather_rows: index out of range");
    std::copy_n(value(a).data() + index[i] * c, c, out.data() + i * c);
  }
  return push(n, c, std::move(out), needs(a), [a, c, idx = std::move(index)](Tape& t, std::size_t self) {
    const auto& g = t.nodes_[self].grad;
    auto& ga = t.grad(a.id);
    for (std::size_t i = 0; i < idx.size(); ++i)
      for (std::size_t j = 0; j < c; ++j) ga[idx[i] * c + j] += g[i * c + j];
  });
}

Var Tape::index_add_rows(Var a, std::vector<std::size_t> from, std::vector<std::size_t> to,
                         std::size_t out_rows) {
  require(from.size() == to.size(), "index_add_rows: index lists differ in length");
  const std::size_t c = cols(a);
  std::vector<double> out(out_rows * c, 0.0);
  for (std::size_t e = 0; e < from.size(); ++e) {
    require(from[e] < rows(a) && to[e] < out_rows, "index_add_rows: index out of range");
    for (std::size_t j = 0; j < c; ++j) out[to[e] * c + j] += value(a)[from[e] * c + j];
  }
  return push(out_rows, c, std::move(out), needs(a),
              [a, c, from = std::move(from), to = std::move(to)](Tape& t, std::size_t self) {
                const auto& g = t.nodes_[self].grad;
                auto& ga = t.grad(a.id);
                for (std::size_t e = 0; e < from.size(); ++e)
                  for (std::size_t j = 0; j < c; ++j) ga[from[e] * c + j] += g[to[e] * c + j];
              });
}

Var Tape::permute_cols(Var a, std::vector<long> source) {
  require(rows(a) == 1, "permute_cols: input must be a single row");
  const long n = static_cast<long>(cols(a));
  std::vector<double> out(source.size(), 0.0);
  for (std::size_t j = 0; j < source.size(); ++j) {
    require(source[j] < n, "permute_cols: source index out of range");
    if (source[j] >= 0) out[j] = value(a)[static_cast<std::size_t>(source[j])];
  }
  const std::size_t width = source.size();
  return push(1, width, std::move(out), needs(a), [a, src = std::move(source)](Tape& t, std::size_t self) {
    const auto& g = t.nodes_[self].grad;
    auto& ga = t.grad(a.id);
    for (std::size_t j = 0; j < src.size(); ++j)
      if (src[j] >= 0) ga[static_cast<std::size_t>(src[j])] += g[j];
  });
}

Var Tape::pick(Var a, std::size_t index) {
  require(index < value(a).size(), "pick: index out of range");
  return push(1, 1, {value(a)[index]}, needs(a), [a, index](Tape& t, std::size_t self) {
    t.grad(a.id)[index] += t.nodes_[self].grad[0];
  });
}

Var Tape::sum(Var a) {
  double s = 0.0;
  for (double x : value(a)) s += x;
  return push(1, 1, {s}, needs(a), [a](Tape& t, std::size_t self) {
    const double g = t.nodes_[self].grad[0];
    for (double& x : t.grad(a.id)) x += g;
  });
}

Var Tape::dropout(Var a, double rate, Rng& rng) {
  if (rate < 0.0 || rate >= 1.0) throw Error(ErrorCode::InvalidArgument, "dropout rate must be in [0, 1)");
  if (!training_ || rate == 0.0) return a;
  const double keep = 1.0 / (1.0 - rate);
  std::vector<double> mask(value(a).size());
  for (double& m : mask) m = rng.uniform() < rate ? 0.0 : keep;
  return mul_const(a, std::move(mask));
}

Var Tape::cosine(Var a, Var b) {
  require(value(a).size() == value(b).size(), "cosine: length mismatch");
  const auto& av = value(a);
  const auto& bv = value(b);
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) {
    dot += av[i] * bv[i];
    na += av[i] * av[i];
    nb += bv[i] * bv[i];
  }
  na = std::sqrt(na);
  nb = std::sqrt(nb);
  const bool degenerate = na == 0.0 || nb == 0.0;
  note_branch(degenerate);
  if (degenerate) return push(1, 1, {0.0}, false, nullptr);
  const double c = dot / (na * nb);
  return push(1, 1, {c}, needs(a) || needs(b), [a, b, c, na, nb](Tape& t, std::size_t self) {
    const double g = t.nodes_[self].grad[0];
    const auto& av = t.data(a.id);
    const auto& bv = t.data(b.id);
    if (t.needs(a)) {
      auto& ga = t.grad(a.id);
      for (std::size_t i = 0; i < av.size(); ++i)
        ga[i] += g * (bv[i] / (na * nb) - c * av[i] / (na * na));
    }
    if (t.needs(b)) {
      auto& gb = t.grad(b.id);
      for (std::size_t i = 0; i < bv.size(); ++i)
        gb[i] += g * (av[i] / (na * nb) - c * bv[i] / (nb * nb));
    }
  });
}

Var Tape::cross_entropy(Var pred, std::vector<double> target, double clamp) {
  const auto& p = value(pred);
  require(target.size() == p.size(), "cross_entropy: length mismatch");
  double loss = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (target[i] == 0.0) continue;
    note_branch(p[i] > clamp);
    loss -= target[i] * std::log(std::max(p[i], clamp));
  }
  return push(1, 1, {loss}, needs(pred), [pred, clamp, tgt = std::move(target)](Tape& t, std::size_t self) {
    const double g = t.nodes_[self].grad[0];
    const auto& p = t.data(pred.id);
    auto& gp = t.grad(pred.id);
    for (std::size_t i = 0; i < p.size(); ++i)
      if (tgt[i] != 0.0 && p[i] > clamp) gp[i] -= g * tgt[i] / p[i];
  });
}

Var Tape::bce(Var p, double label, double weight, double clamp) {
  require(rows(p) == 1 && cols(p) == 1, "bce: probability must be 1x1");
  const double raw = scalar(p);
  const bool clamped = raw < clamp || raw > 1.0 - clamp;
  note_branch(clamped);
  const double pc = std::clamp(raw, clamp, 1.0 - clamp);
  const double loss = -weight * (label * std::log(pc) + (1.0 - label) * std::log(1.0 - pc));
  return push(1, 1, {loss}, needs(p) && !clamped, [p, label, weight, pc](Tape& t, std::size_t self) {
    const double g = t.nodes_[self].grad[0];
    t.grad(p.id)[0] += -g * weight * (label / pc - (1.0 - label) / (1.0 - pc));
  });
}

void Tape::backward(Var loss) {
  require(rows(loss) == 1 && cols(loss) == 1, "backward: loss must be 1x1");
  if (!needs(loss)) return;
  grad(loss.id)[0] += 1.0;
  for (std::size_t id = loss.id + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (!n.back || n.grad.empty()) continue;
    n.back(*this, id);
  }
}

}  // namespace esp::nn

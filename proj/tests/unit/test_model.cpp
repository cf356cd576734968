#include <algorithm>
#include <cmath>
#include <numeric>

#include "corpus.hpp"
#include "doctest.h"
#include "esp/chem/smiles.hpp"
#include "esp/common/error.hpp"
#include "esp/common/rng.hpp"
#include "esp/model/spectrum_model.hpp"
#include "esp/nn/gradcheck.hpp"

using namespace esp;
using namespace esp::model;
using esp::chem::parse_smiles;
using esp::nn::ParameterSet;
using esp::nn::Tape;
using esp::nn::Var;
using esp::spectra::InstrumentSetting;

namespace {

std::vector<std::size_t> shuffled_indices(std::size_t n, Rng& rng) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), 0);
  rng.shuffle(p);
  return p;
}

void zero_dense(nn::Dense& d) {
  std::fill(d.weight_param().value.begin(), d.weight_param().value.end(), 0.0);
  std::fill(d.bias_param().value.begin(), d.bias_param().value.end(), 0.0);
}

void randomize(ParameterSet& ps, Rng& rng, double scale = 0.5) {
  for (std::size_t k = 0; k < ps.count(); ++k)
    for (double& v : ps.at(k).value) v = rng.uniform(-scale, scale);
}

std::vector<double> row_of(const Tape& t, Var v, std::size_t r) {
  const auto& all = t.value(v);
  const std::size_t c = t.cols(v);
  return {all.begin() + static_cast<long>(r * c), all.begin() + static_cast<long>((r + 1) * c)};
}

AtomFeaturizer organic_featurizer() { return AtomFeaturizer({"C", "N", "O", "S", "Cl"}); }

const InstrumentSetting kSetting = InstrumentSetting::from_raw("[M+H]+", 30);

}  // namespace

TEST_CASE("atom featurizer") {
  AtomFeaturizer f({"O", "C", "C"});
  CHECK(f.elements() == std::vector<std::string>{"C", "O"});
  CHECK(f.size() == 2 + 1 + 1 + 2);
  CHECK(f.slot("C") == 0);
  CHECK(f.slot("Br") == 2);
  auto m = parse_smiles("CBr");
  auto x = f.features(m);
  CHECK(x[0 * f.size() + 0] == 1.0);
  CHECK(x[1 * f.size() + 2] == 1.0);
  CHECK(x[0 * f.size() + 3] == doctest::Approx(0.12));
  AtomFeaturizer plain({"C"}, false, false);
  CHECK(plain.size() == 3);
}

TEST_CASE("encode_mlp") {
  Rng rng(1);
  ParameterSet ps;
  MlpEncoder enc(ps, "mlp", 64, 16, rng);
  chem::Fingerprint empty(64, 2);
  zero_dense(enc.is_net());
  for (nn::Dense* d : {&enc.fp_net(), &enc.out_net()})
    std::fill(d->bias_param().value.begin(), d->bias_param().value.end(), 0.0);
  {
    Tape t;
    Var z = enc.encode(t, empty, kSetting);
    CHECK(t.cols(z) == 16);
    for (double v : t.value(z)) CHECK(v == 0.0);
  }
  Rng r2(2);
  randomize(ps, r2);
  auto a = chem::circular_fingerprint(parse_smiles("CCO"), 2, 64);
  auto b = chem::circular_fingerprint(parse_smiles("OCC"), 2, 64);
  Tape t;
  const auto za = t.value(enc.encode(t, a, kSetting));
  CHECK(za == t.value(enc.encode(t, b, kSetting)));
  CHECK(t.cols(enc.encode(t, a, kSetting)) == 16);
  CHECK_THROWS_AS(enc.encode(t, chem::Fingerprint(128, 2), kSetting), Error);
}

TEST_CASE("gine node init and layers") {
  Rng rng(3);
  ParameterSet ps;
  GineEncoder enc(ps, "g", organic_featurizer(), 8, 3, rng);
  {
    auto m = parse_smiles("CC");
    Tape t;
    Var h0 = enc.init_node_states(t, m, kSetting);
    CHECK(t.rows(h0) == 2);
    CHECK(row_of(t, h0, 0) == row_of(t, h0, 1));
    auto s = parse_smiles("[Se]");
    CHECK(t.rows(enc.init_node_states(t, s, kSetting)) == 1);
  }
  {
    // Isolated node: empty sums.
    auto m = parse_smiles("C");
    Tape t;
    Var h = enc.layer(t, enc.init_node_states(t, m, kSetting), m, 0);
    for (std::size_t j = 0; j < 8; ++j) {
      const double b = enc.node_net(0).bias(j);
      CHECK(t.value(h)[j] == (b > 0 ? b : 0.0));
    }
  }
  {
    // Identity update network: h'_v = relu(h_u + h_e).
    auto m = parse_smiles("CO");
    nn::Dense& nk = enc.node_net(1);
    zero_dense(nk);
    for (std::size_t i = 0; i < 8; ++i) nk.set_weight(i, i, 1.0);
    Tape t;
    Var h0 = enc.init_node_states(t, m, kSetting);
    Var h1 = enc.layer(t, h0, m, 1);
    std::vector<double> he(8);
    for (std::size_t j = 0; j < 8; ++j) he[j] = enc.edge_net(1).weight(j, 0) + enc.edge_net(1).bias(j);
    for (std::size_t v = 0; v < 2; ++v) {
      auto hu = row_of(t, h0, 1 - v);
      auto got = row_of(t, h1, v);
      for (std::size_t j = 0; j < 8; ++j) CHECK(got[j] == std::max(0.0, hu[j] + he[j]));
    }
  }
}

TEST_CASE("gine permutation equivariance and invariance") {
  Rng rng(4);
  ParameterSet ps;
  GineEncoder enc(ps, "g", organic_featurizer(), 16, 3, rng);
  for (auto smi : esp::testing::kCorpusSmiles) {
    auto m = parse_smiles(smi);
    Tape t(false, false);
    Var h = enc.node_states(t, m, kSetting);
    Var z = enc.readout_mean(t, h);
    for (int trial = 0; trial < 5; ++trial) {
      auto perm = shuffled_indices(m.atom_count(), rng);
      auto pm = m.permuted(perm);
      Var hp = enc.node_states(t, pm, kSetting);
      for (std::size_t i = 0; i < m.atom_count(); ++i) {
        auto a = row_of(t, h, i);
        auto b = row_of(t, hp, perm[i]);
        for (std::size_t j = 0; j < a.size(); ++j) CHECK(std::abs(a[j] - b[j]) < 1e-9);
      }
      auto zp = t.value(enc.readout_mean(t, hp));
      for (std::size_t j = 0; j < zp.size(); ++j) CHECK(std::abs(zp[j] - t.value(z)[j]) < 1e-6);
    }
  }
}

TEST_CASE("gine readout and conditioning") {
  Rng rng(5);
  ParameterSet ps;
  GineEncoder enc(ps, "g", organic_featurizer(), 8, 3, rng);
  Tape t;
  Var two = t.constant(2, 3, {1, 2, 3, 5, 6, 7});
  CHECK(t.value(enc.readout_mean(t, two)) == std::vector<double>{3, 4, 5});
  Var one = t.constant(1, 3, {1, 2, 3});
  CHECK(t.value(enc.readout_mean(t, one)) == std::vector<double>{1, 2, 3});

  auto m = parse_smiles("C");
  auto z = t.value(enc.encode(t, m, kSetting));
  CHECK(z.size() == 8);
  for (double v : z) CHECK(std::isfinite(v));

  auto ethanol = parse_smiles("CCO");
  auto z1 = t.value(enc.encode(t, ethanol, InstrumentSetting::from_raw("[M+H]+", 10)));
  auto z2 = t.value(enc.encode(t, ethanol, InstrumentSetting::from_raw("[M+H]+", 90)));
  CHECK(z1 != z2);
}

TEST_CASE("gine locality on a path graph") {
  Rng rng(6);
  ParameterSet ps;
  GineEncoder enc(ps, "g", organic_featurizer(), 8, 3, rng);
  auto base = parse_smiles("CCCCCCCC");
  auto far = parse_smiles("CCCCNCCC");   // atom 4 is four bonds from atom 0
  auto near = parse_smiles("CCCNCCCC");  // atom 3 is within reach
  Tape t;
  auto h = row_of(t, enc.node_states(t, base, kSetting), 0);
  CHECK(row_of(t, enc.node_states(t, far, kSetting), 0) == h);
  CHECK(row_of(t, enc.node_states(t, near, kSetting), 0) != h);
}

TEST_CASE("prediction head masking, gating and reverse alignment") {
  Rng rng(7);
  ParameterSet ps;
  PredictionHead head(ps, "head", 6, 8, 50, true, rng);
  std::vector<double> zv(6);
  for (double& v : zv) v = rng.uniform(0, 1);
  for (double pm : {0.0, 12.4, 12.5, 30.0, 49.4}) {
    Tape t;
    auto y = t.value(head.predict(t, t.row(zv), pm));
    CHECK(y.size() == 50);
    const auto cut = static_cast<std::size_t>(std::round(pm));
    for (std::size_t i = 0; i < 50; ++i) {
      CHECK(y[i] >= 0.0);
      if (i > cut) CHECK(y[i] == 0.0);
    }
  }
  {
    Tape t;
    CHECK_THROWS_AS(head.predict(t, t.row(zv), 50.0), Error);
    CHECK_THROWS_AS(head.predict(t, t.row(zv), -1.0), Error);
  }

  // Gate pinned open: output is the forward head alone.
  zero_dense(head.gate_net());
  for (std::size_t o = 0; o < 50; ++o) head.gate_net().set_bias(o, 1000.0);
  {
    Tape t;
    auto y = t.value(head.predict(t, t.row(zv), 30.2));
    Tape u;
    Var h = head.trunk(1)(u, head.trunk(0)(u, u.row(zv)));
    auto f = u.value(head.forward_net()(u, h));
    for (std::size_t i = 0; i < 50; ++i) CHECK(y[i] == (i <= 30 ? std::max(0.0, f[i]) : 0.0));
  }

  // Gate closed, reverse head emits one unit at index j.
  for (std::size_t o = 0; o < 50; ++o) head.gate_net().set_bias(o, -1000.0);
  zero_dense(head.forward_net());
  zero_dense(head.reverse_net());
  const std::size_t j = 7;
  head.reverse_net().set_bias(j, 1.0);
  for (double pm : {20.3, 33.6, 7.0}) {
    Tape t;
    auto y = t.value(head.predict(t, t.row(zv), pm));
    const std::size_t expect = static_cast<std::size_t>(std::round(pm)) - j;
    for (std::size_t i = 0; i < 50; ++i) CHECK(y[i] == (i == expect ? 1.0 : 0.0));
  }
  CHECK(precursor_bin(12.5, 50) == 13);
}

TEST_CASE("attention identities") {
  Rng rng(8);
  ParameterSet ps;
  AttentionHead attn(ps, "attn", 50, 8, 4, 1.0, rng);
  randomize(ps, rng);
  std::vector<double> yv(50);
  for (double& v : yv) v = rng.uniform() < 0.5 ? 0.0 : rng.uniform(0, 1);
  {
    Tape t;
    CHECK(t.value(attn.update(t, t.row(yv))) == yv);
  }
  auto w = attn.head_weights();
  CHECK(std::abs(std::accumulate(w.begin(), w.end(), 0.0) - 1.0) < 1e-9);

  attn.set_theta(0.3);
  for (std::size_t l = 0; l < 4; ++l) std::fill(attn.d(l).value.begin(), attn.d(l).value.end(), 0.0);
  {
    Tape t;
    auto u = t.value(attn.update(t, t.row(yv)));
    for (std::size_t i = 0; i < 50; ++i) CHECK(u[i] == 0.3 * yv[i]);
  }

  ParameterSet ps1;
  AttentionHead hand(ps1, "hand", 3, 1, 1, 0.0, rng);
  hand.d(0).value = {1, 0, 1};
  Tape t;
  auto co = t.value(hand.co_occurrence(t, t.row({2, 0, 0})));
  CHECK(std::abs(co[0] - 2) < 1e-9);
  CHECK(std::abs(co[1] - 0) < 1e-9);
  CHECK(std::abs(co[2] - 2) < 1e-9);
  CHECK(t.value(hand.update(t, t.row({2, 0, 0}))) == co);
}

TEST_CASE("factorised co-occurrence is associative") {
  Rng rng(9);
  const std::size_t P = 40, M = 5;
  std::vector<double> D(P * M), y(P), w(P);
  for (double& v : D) v = rng.uniform(-1, 1);
  for (double& v : y) v = rng.uniform(0, 1);
  for (double& v : w) v = rng.uniform(-1, 1);
  Tape t;
  Var d = t.constant(P, M, D);
  Var yQ = t.matmul_bt(t.matmul(t.row(y), d), d);
  Var Qw = t.matmul_bt(t.matmul(t.row(w), d), d);  // Q is symmetric, so w Q = (Q w)^T
  double lhs = 0, rhs = 0;
  for (std::size_t i = 0; i < P; ++i) {
    lhs += t.value(yQ)[i] * w[i];
    rhs += y[i] * t.value(Qw)[i];
  }
  CHECK(std::abs(lhs - rhs) < 1e-9);
}

TEST_CASE("aux and spectral losses") {
  std::vector<double> onehot = {0, 1, 0, 0};
  CHECK(aux_loss(onehot, onehot) < 1e-6);
  CHECK(aux_loss(std::vector<double>(4, 0.25), onehot) == doctest::Approx(std::log(4.0)));
  Rng rng(10);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> r(6), q(6);
    for (double& v : r) v = rng.uniform(0, 1);
    for (double& v : q) v = rng.uniform(0, 1);
    double zr = std::accumulate(r.begin(), r.end(), 0.0), zq = std::accumulate(q.begin(), q.end(), 0.0);
    double entropy = 0;
    for (std::size_t i = 0; i < 6; ++i) {
      r[i] /= zr;
      q[i] /= zq;
      entropy -= r[i] * std::log(r[i]);
    }
    CHECK(aux_loss(q, r) >= entropy - 1e-12);
    CHECK(std::abs(aux_loss(r, r) - entropy) < 1e-12);
  }
  std::vector<double> y = {0, 3, 4, 0}, o = {1, 0, 0, 2};
  CHECK(spectral_loss(y, y) == doctest::Approx(-1.0));
  CHECK(spectral_loss(o, y) == 0.0);
  std::vector<double> y2 = {0.5, 1, 2, 0};
  std::vector<double> y2s = y2;
  for (double& v : y2s) v *= 7.5;
  CHECK(spectral_loss(y2s, y) == doctest::Approx(spectral_loss(y2, y)).epsilon(1e-14));
}

TEST_CASE("total loss combination and gradient") {
  Tape t;
  Var y = t.row({2, 0, 2});
  Var target = t.row({1, 1, 0});
  Var r_hat = t.row({0.2, 0.5, 0.3});
  std::vector<double> r = {0, 1, 0};
  const double l = t.scalar(spectral_loss(t, y, target));
  const double a = t.scalar(aux_loss(t, r_hat, r));
  CHECK(t.scalar(total_loss(t, y, target, r_hat, r, 0.0)) == l);
  CHECK(t.scalar(total_loss(t, y, target, r_hat, r, 1.0)) == doctest::Approx(l + a).epsilon(1e-14));
  CHECK(l == doctest::Approx(-0.5));
  CHECK(a == doctest::Approx(std::log(2.0)));

  ModelConfig cfg;
  cfg.bins = 30;
  cfg.fp_bits = 64;
  cfg.hidden = 8;
  cfg.attention_rank = 4;
  cfg.topics = 5;
  cfg.lambda = 0.7;
  SpectrumModel model(cfg, organic_featurizer(), 11);
  auto mol = parse_smiles("CCO");
  auto fp = chem::circular_fingerprint(mol, 2, 64);
  ModelInput in{&mol, &fp, kSetting, 20.0};
  std::vector<double> tgt(30, 0.0);
  tgt[3] = 0.6;
  tgt[10] = 0.8;
  std::vector<double> topics = {0.1, 0.2, 0.3, 0.2, 0.2};
  auto grads = [&](const std::vector<double>* tp, double lambda) {
    model.params().zero_grad();
    Tape tape(true);
    Var loss;
    if (lambda < 0) {
      auto out = model.forward(tape, in);
      loss = aux_loss(tape, out.topics, *tp);
    } else {
      loss = model.loss(tape, in, tgt, tp);
    }
    tape.backward(loss);
    std::vector<double> g;
    for (std::size_t k = 0; k < model.params().count(); ++k)
      g.insert(g.end(), model.params().at(k).grad.begin(), model.params().at(k).grad.end());
    return g;
  };
  auto g_total = grads(&topics, 1);
  auto g_spec = grads(nullptr, 1);
  auto g_aux = grads(&topics, -1);
  for (std::size_t i = 0; i < g_total.size(); ++i)
    CHECK(g_total[i] == doctest::Approx(g_spec[i] + 0.7 * g_aux[i]).epsilon(1e-10));
}

namespace {

void require_gradients(ParameterSet& ps, const std::function<Var(Tape&)>& f) {
  auto rep = nn::check_gradients(ps, f);
  CHECK(rep.checked > 0);
  CHECK_MESSAGE(rep.max_rel_error < 1e-4, rep.worst);
}

}  // namespace

TEST_CASE("gradient checks for encoders and heads") {
  Rng rng(12);
  auto mol = parse_smiles("CC(=O)Nc1ccc(O)cc1");
  std::vector<double> w(12);
  for (double& v : w) v = rng.uniform(-1, 1);
  auto probe = [&](Tape& t, Var z) { return t.sum(t.mul(z, t.row(std::vector<double>(w.begin(), w.begin() + t.cols(z))))); };
  {
    ParameterSet ps;
    MlpEncoder enc(ps, "mlp", 64, 6, rng);
    randomize(ps, rng);
    auto fp = chem::circular_fingerprint(mol, 2, 64);
    require_gradients(ps, [&](Tape& t) { return probe(t, enc.encode(t, fp, kSetting)); });
  }
  {
    ParameterSet ps;
    GineEncoder enc(ps, "g", organic_featurizer(), 6, 3, rng);
    randomize(ps, rng);
    require_gradients(ps, [&](Tape& t) { return probe(t, enc.encode(t, mol, kSetting)); });
  }
  {
    ParameterSet ps;
    AttentionHead attn(ps, "a", 50, 8, 4, 0.5, rng);
    randomize(ps, rng);
    std::vector<double> y(50), tgt(50);
    for (double& v : y) v = rng.uniform(0, 1);
    for (double& v : tgt) v = rng.uniform(0, 1);
    require_gradients(ps, [&](Tape& t) { return spectral_loss(t, attn.update(t, t.row(y)), t.row(tgt)); });
  }
  {
    ParameterSet ps;
    AuxHead aux(ps, "aux", 6, 6, 5, rng);
    randomize(ps, rng);
    std::vector<double> z(6);
    for (double& v : z) v = rng.uniform(0, 1);
    std::vector<double> r = {0.1, 0.4, 0.2, 0.2, 0.1};
    require_gradients(ps, [&](Tape& t) { return aux_loss(t, aux.predict(t, t.row(z)), r); });
  }
  {
    ParameterSet ps;
    PredictionHead head(ps, "h", 6, 6, 30, true, rng);
    randomize(ps, rng);
    std::vector<double> z(6), tgt(30);
    for (double& v : z) v = rng.uniform(0, 1);
    for (double& v : tgt) v = rng.uniform(0, 1);
    require_gradients(ps, [&](Tape& t) { return spectral_loss(t, head.predict(t, t.row(z), 22.0), t.row(tgt)); });
  }
}

TEST_CASE("full model: every parameter receives gradient, predictions are deterministic") {
  for (auto kind : {EncoderKind::Mlp, EncoderKind::Gnn}) {
    ModelConfig cfg;
    cfg.kind = kind;
    cfg.bins = 40;
    cfg.fp_bits = 128;
    cfg.hidden = 12;
    cfg.attention_rank = 6;
    cfg.topics = 4;
    SpectrumModel model(cfg, organic_featurizer(), 21);
    auto mol = parse_smiles("CC(=O)Nc1ccc(O)cc1");
    auto fp = chem::circular_fingerprint(mol, 2, 128);
    ModelInput in{&mol, &fp, kSetting, 35.0};
    std::vector<double> tgt(40, 0.0);
    Rng rng(3);
    for (std::size_t i = 0; i < 36; ++i) tgt[i] = rng.uniform() < 0.3 ? rng.uniform(0, 1) : 0.0;
    std::vector<double> topics = {0.25, 0.25, 0.4, 0.1};
    model.params().zero_grad();
    Tape t(true);
    t.backward(model.loss(t, in, tgt, &topics));
    for (std::size_t k = 0; k < model.params().count(); ++k) {
      const auto& p = model.params().at(k);
      const bool any = std::any_of(p.grad.begin(), p.grad.end(), [](double g) { return g != 0.0; });
      CHECK_MESSAGE(any, p.name());
    }
    auto y1 = model.predict(in);
    CHECK(y1 == model.predict(in));
    for (std::size_t i = 36; i < 40; ++i) CHECK(y1[i] == 0.0);
    SpectrumModel twin(cfg, organic_featurizer(), 21);
    CHECK(twin.predict(in) == y1);
  }
}

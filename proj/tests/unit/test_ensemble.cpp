#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "doctest.h"
#include "esp/common/error.hpp"
#include "esp/common/rng.hpp"
#include "esp/ensemble/ensemble.hpp"
#include "esp/nn/gradcheck.hpp"
#include "esp/spectra/spectrum.hpp"

using namespace esp;
using namespace esp::ensemble;

namespace {

std::vector<double> random_spectrum(std::size_t n, Rng& rng) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform() < 0.4 ? rng.uniform(0, 1) : 0.0;
  return v;
}

ClassifierConfig small_config() {
  ClassifierConfig c;
  c.bins = 20;
  c.hidden = 16;
  c.max_epochs = 60;
  c.batch_size = 8;
  c.adam.lr = 1e-2;
  return c;
}

}  // namespace

TEST_CASE("labels and SMAPE hand cases") {
  CHECK(make_label(3, 5).d_mlp == 1);
  CHECK(make_label(5, 3).d_mlp == 0);
  CHECK(make_label(5, 3).d_gnn == 1);
  CHECK(make_label(4, 4).d_mlp == 1);
  CHECK(smape_weight(3, 5) == 0.25);
  CHECK(smape_weight(4, 4) == 0.0);
  CHECK(smape_weight(1, 9) == 0.8);
}

TEST_CASE("SMAPE and label contract over all integer rank pairs") {
  for (int a = 1; a <= 50; ++a)
    for (int b = 1; b <= 50; ++b) {
      const double g = smape_weight(a, b);
      CHECK(g >= 0.0);
      CHECK(g < 1.0);
      CHECK((g == 0.0) == (a == b));
      CHECK(g == smape_weight(b, a));
      const Label l = make_label(a, b);
      CHECK(l.d_mlp + l.d_gnn == 1);
      CHECK(l.d_mlp == (a <= b ? 1 : 0));
    }
}

TEST_CASE("assign_labels modes") {
  std::vector<EnsembleExample> ex(2);
  ex[0].rank_mlp = 3;
  ex[0].rank_gnn = 5;
  ex[0].loss_mlp = -0.4;
  ex[0].loss_gnn = -0.9;
  ex[1].rank_mlp = 2;
  ex[1].rank_gnn = 2;
  assign_labels(ex, LabelSource::Rank, Weighting::Smape);
  CHECK(ex[0].d_mlp == 1);
  CHECK(ex[0].gamma == 0.25);
  CHECK(ex[1].gamma == 0.0);
  assign_labels(ex, LabelSource::Loss, Weighting::Smape);
  CHECK(ex[0].d_mlp == 0);
  CHECK(ex[0].gamma == doctest::Approx(0.5));
  assign_labels(ex, LabelSource::Rank, Weighting::Uniform);
  CHECK(ex[0].gamma == 1.0);
  CHECK(ex[1].gamma == 1.0);
  CHECK(parse_label_source("loss") == LabelSource::Loss);
  CHECK(parse_weighting("uniform") == Weighting::Uniform);
  CHECK_THROWS_AS(parse_weighting("x"), Error);
}

TEST_CASE("blend") {
  std::vector<double> a = {1, 2, 3}, b = {3, 0, 1};
  CHECK(blend(1.0, a, b) == a);
  CHECK(blend(0.0, a, b) == b);
  CHECK(blend(0.5, a, b) == std::vector<double>{2, 1, 2});
  for (double v : blend(0.3, a, b)) CHECK(v >= 0.0);
}

TEST_CASE("esp_rank reduction identities and brute-force oracle") {
  Rng rng(1);
  ClassifierConfig cfg = small_config();
  EnsembleClassifier clf(cfg, 3);
  for (int q = 0; q < 200; ++q) {
    RankingQuery rq;
    rq.query = random_spectrum(20, rng);
    for (int c = 0; c < 20; ++c) {
      rq.mlp.push_back(random_spectrum(20, rng));
      rq.gnn.push_back(random_spectrum(20, rng));
    }
    rq.target = rng.below(20);
    const double r_mlp = ranking::rank_candidates(rq.query, rq.mlp, rq.target).rank;
    const double r_gnn = ranking::rank_candidates(rq.query, rq.gnn, rq.target).rank;
    CHECK(esp_rank(rq, clf, 1.0).rank == r_mlp);
    CHECK(esp_rank(rq, clf, 0.0).rank == r_gnn);
  }

  // Five candidates, fixed predictions: blend-and-sort by hand.
  RankingQuery rq;
  rq.query = {1, 0, 1, 0};
  rq.mlp = {{1, 0, 0, 0}, {0, 1, 0, 0}, {1, 0, 1, 0}, {0, 0, 0, 1}, {1, 1, 1, 1}};
  rq.gnn = {{0, 0, 1, 0}, {1, 0, 1, 0}, {0, 1, 0, 0}, {1, 0, 1, 1}, {0, 0, 0, 1}};
  rq.target = 2;
  for (double d : {0.0, 0.2, 0.5, 0.8, 1.0}) {
    std::vector<double> s;
    for (std::size_t c = 0; c < 5; ++c) {
      std::vector<double> y(4);
      for (std::size_t i = 0; i < 4; ++i) y[i] = d * rq.mlp[c][i] + (1 - d) * rq.gnn[c][i];
      s.push_back(spectra::cosine_similarity(y, rq.query));
    }
    std::vector<std::size_t> order(5);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return s[a] > s[b]; });
    double first = 0, last = 0;
    bool seen = false;
    for (std::size_t p = 0; p < 5; ++p)
      if (s[order[p]] == s[2]) {
        if (!seen) first = static_cast<double>(p + 1);
        seen = true;
        last = static_cast<double>(p + 1);
      }
    CHECK(esp_rank(rq, d).rank == (first + last) / 2);
  }
}

TEST_CASE("classifier gradients and output range") {
  Rng rng(2);
  ClassifierConfig cfg = small_config();
  EnsembleClassifier clf(cfg, 5);
  for (std::size_t k = 0; k < clf.params().count(); ++k)
    for (double& v : clf.params().at(k).value) v = rng.uniform(-0.5, 0.5);
  auto q = random_spectrum(20, rng);
  auto rep = nn::check_gradients(clf.params(), [&](nn::Tape& t) { return t.bce(clf.forward(t, q), 1.0, 0.7); });
  CHECK(rep.checked > 0);
  CHECK_MESSAGE(rep.max_rel_error < 1e-4, rep.worst);
  const double p = clf.predict(q);
  CHECK(p > 0.0);
  CHECK(p < 1.0);
  nn::Tape t;
  CHECK(t.scalar(clf.forward(t, q)) == doctest::Approx(p).epsilon(1e-12));
}

TEST_CASE("train_ensemble: degenerate labels, no informative examples, gamma scaling") {
  Rng rng(3);
  std::vector<EnsembleExample> ex;
  for (int i = 0; i < 40; ++i) {
    EnsembleExample e;
    e.query_id = "q" + std::to_string(i);
    e.query = random_spectrum(20, rng);
    e.rank_mlp = 1;
    e.rank_gnn = 2 + static_cast<double>(rng.below(5));
    ex.push_back(e);
  }
  assign_labels(ex, LabelSource::Rank, Weighting::Smape);
  ClassifierConfig cfg = small_config();
  EnsembleTrainingLog log;
  auto clf = train_ensemble(ex, {}, cfg, &log);
  for (const auto& e : ex) CHECK(clf.predict(e.query) > 0.9);
  CHECK(log.train_loss.back() < log.train_loss.front());

  auto doubled = ex;
  for (auto& e : doubled) e.gamma *= 2;
  auto clf2 = train_ensemble(doubled, {}, cfg);
  for (const auto& e : ex) CHECK((clf.predict(e.query) >= 0.5) == (clf2.predict(e.query) >= 0.5));

  auto flat = ex;
  for (auto& e : flat) e.rank_gnn = e.rank_mlp;
  assign_labels(flat, LabelSource::Rank, Weighting::Smape);
  try {
    train_ensemble(flat, {}, cfg);
    FAIL("expected NoInformativeExamples");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NoInformativeExamples);
  }
  CHECK(train_ensemble(ex, {}, cfg).predict(ex[0].query) == clf.predict(ex[0].query));
}

TEST_CASE("training report") {
  EnsembleExample e;
  e.query_id = "q1";
  e.rank_mlp = 3;
  e.rank_gnn = 5;
  e.d_mlp = 1;
  e.gamma = 0.25;
  std::ostringstream os;
  write_training_report(os, {e});
  CHECK(os.str() == "query_id\trank_mlp\trank_gnn\td\tgamma\nq1\t3\t5\t1\t0.25\n");
}

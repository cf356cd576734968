#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "doctest.h"
#include "esp/chem/smiles.hpp"
#include "esp/common/error.hpp"
#include "esp/common/rng.hpp"
#include "esp/ranking/ranking.hpp"

using namespace esp;
using namespace esp::ranking;

namespace {

// Independent oracle: stable-sort candidates by similarity (descending), the
// target's 1-based position among its tie block is averaged over the block.
double sorted_mid_rank(const std::vector<double>& s, std::size_t target) {
  std::vector<std::size_t> order(s.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return s[a] > s[b]; });
  std::size_t first = 0, last = 0;
  bool seen = false;
  for (std::size_t p = 0; p < order.size(); ++p) {
    if (s[order[p]] == s[target]) {
      if (!seen) first = p;
      seen = true;
      last = p;
    }
  }
  return (static_cast<double>(first + 1) + static_cast<double>(last + 1)) / 2.0;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("mid-rank hand cases") {
  CHECK(mid_rank(std::vector<double>{0.9, 0.5, 0.1}, 0) == 1.0);
  CHECK(mid_rank(std::vector<double>{0.9, 0.9, 0.1}, 0) == 1.5);
  CHECK(mid_rank(std::vector<double>{0.9, 0.9, 0.9}, 2) == 2.0);
  CHECK(mid_rank(std::vector<double>{0.1, 0.5, 0.9}, 0) == 3.0);
  CHECK(code_of([] { mid_rank(std::vector<double>{}, 0); }) == ErrorCode::EmptyCandidateSet);
  CHECK(code_of([] { mid_rank(std::vector<double>{1.0}, 1); }) == ErrorCode::TargetIndexOutOfRange);
}

TEST_CASE("rank_candidates uses cosine to the query") {
  std::vector<double> query = {0, 1, 1, 0};
  std::vector<std::vector<double>> pred = {{0, 1, 1, 0}, {1, 0, 0, 0}, {0, 2, 1, 0}};
  auto r = rank_candidates(query, pred, 2, "mlp-pd");
  CHECK(r.rank == 2.0);
  CHECK(r.similarities[0] == doctest::Approx(1.0));
  CHECK(r.model_tag == "mlp-pd");
  CHECK(rank_candidates(query, pred, 0).rank == 1.0);
}

TEST_CASE("rank matches sort oracle, is permutation and monotone invariant") {
  Rng rng(1);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.below(20);
    std::vector<double> s(n);
    for (double& v : s) v = static_cast<double>(rng.below(6)) / 5.0;  // coarse values force ties
    const std::size_t t = rng.below(n);
    const double r = mid_rank(s, t);
    CHECK(r == sorted_mid_rank(s, t));
    CHECK(r >= 1.0);
    CHECK(r <= static_cast<double>(n));

    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm);
    std::vector<double> ps(n);
    std::size_t pt = 0;
    for (std::size_t i = 0; i < n; ++i) {
      ps[i] = s[perm[i]];
      if (perm[i] == t) pt = i;
    }
    CHECK(mid_rank(ps, pt) == r);

    std::vector<double> ms(s);
    for (double& v : ms) v = std::exp(3 * v) - 7;
    CHECK(mid_rank(ms, t) == r);
  }
}

TEST_CASE("average rank and rank@k") {
  std::vector<double> ones = {1, 1, 1};
  CHECK(average_rank(ones) == 1.0);
  CHECK(rank_at_k(ones, 1) == 1.0);
  std::vector<double> r = {1, 3};
  CHECK(rank_at_k(r, 1) == 0.5);
  CHECK(rank_at_k(r, 3) == 1.0);
  CHECK(average_rank(r) == 2.0);
  Rng rng(2);
  std::vector<double> many(100);
  for (double& v : many) v = 1 + static_cast<double>(rng.below(40)) / 2.0;
  double prev = 0;
  for (int k = 1; k <= 20; ++k) {
    const double at = rank_at_k(many, k);
    CHECK(at >= prev);
    prev = at;
  }
}

TEST_CASE("rank@k recount from similarity lists") {
  Rng rng(3);
  std::vector<RankResult> results;
  for (int q = 0; q < 200; ++q) {
    std::vector<double> s(1 + rng.below(15));
    for (double& v : s) v = static_cast<double>(rng.below(8));
    results.push_back(rank_from_similarities(s, rng.below(s.size())));
  }
  for (int k = 1; k <= 10; ++k) {
    std::size_t hits = 0;
    for (const auto& r : results) {
      std::size_t above = 0, ties = 0;
      for (std::size_t c = 0; c < r.similarities.size(); ++c) {
        if (c == r.target_index) continue;
        above += r.similarities[c] > r.similarities[r.target_index];
        ties += r.similarities[c] == r.similarities[r.target_index];
      }
      hits += 2 * (above + 1) + ties <= 2 * static_cast<std::size_t>(k);
    }
    CHECK(rank_at_k(results, k) == static_cast<double>(hits) / 200.0);
  }
}

TEST_CASE("stratify_by_formula") {
  std::vector<StratifyItem> items = {{0, "C6H6"}, {1, "C6H6"}, {2, "C2H6O"}, {1, "C6H6"}};
  auto q = stratify_by_formula(items);
  CHECK(q.size() == 4);
  CHECK(group_count(q) == 2);
  CHECK(q[0].candidates == std::vector<std::size_t>{0, 1});
  CHECK(q[0].target_position == 0);
  CHECK(q[1].target_position == 1);
  CHECK(q[3].candidates.size() == 2);
  CHECK(q[2].singleton());
  CHECK(!q[0].singleton());
}

TEST_CASE("candidate catalog loading") {
  std::istringstream two("C2H6O\tethanol\tCCO\nC2H6O\tdme\tCOC\n");
  auto cat = load_candidate_catalog(two);
  CHECK(cat.size() == 1);
  CHECK(cat.at("C2H6O").size() == 2);

  std::istringstream bad("C6H6\tethanol\tCCO\n");
  CHECK(code_of([&] { load_candidate_catalog(bad); }) == ErrorCode::FormulaMismatch);
  std::istringstream bad2("C6H6\tethanol\tCCO\nC2H6O\tdme\tCOC\n");
  std::vector<std::string> warnings;
  auto lenient = load_candidate_catalog(bad2, false, &warnings);
  CHECK(lenient.at("C2H6O").size() == 1);
  CHECK(warnings.size() == 1);

  std::istringstream empty("");
  warnings.clear();
  CHECK(load_candidate_catalog(empty, true, &warnings).empty());
  CHECK(warnings.size() == 1);
}

TEST_CASE("sample_candidates") {
  // Twenty C8 isomers-ish pool: use alkane/alkene chains sharing a formula.
  std::vector<std::string> smiles = {"CCCCCCCC", "CC(C)CCCCC", "CCC(C)CCCC", "CCCC(C)CCC", "CC(C)(C)CCCC",
                                     "CC(C)C(C)CCC", "CC(C)CC(C)CC", "CC(C)CCC(C)C", "CCC(C)C(C)CC",
                                     "CCC(CC)CCC", "CC(C)(C)C(C)CC", "CC(C)(C)CC(C)C", "CC(C)C(C)(C)CC",
                                     "CCC(C)(C)CCC", "CC(C)C(C)C(C)C", "CCC(C)(CC)CC", "CC(C)(C)C(C)(C)C",
                                     "CC(CC)C(C)CC", "CCC(C)CC(C)C", "CC(CC)CC(C)C"};
  std::vector<CatalogEntry> pool;
  for (std::size_t i = 0; i < smiles.size(); ++i)
    pool.push_back(make_catalog_entry("c" + std::to_string(i), chem::parse_smiles(smiles[i])));
  const CatalogEntry& target = pool[3];

  auto most = sample_candidates(pool, target, 10, SimilarityMode::MostSimilar, 0);
  CHECK(most.size() == 10);
  CHECK(most.target_in_pool == 3u);
  CHECK(!most.shortfall);
  std::vector<double> sims;
  for (std::size_t i = 0; i < pool.size(); ++i)
    if (i != 3) sims.push_back(chem::tanimoto(pool[i].fingerprint, target.fingerprint));
  std::sort(sims.rbegin(), sims.rend());
  for (std::size_t k = 0; k < most.others.size(); ++k)
    CHECK(chem::tanimoto(pool[most.others[k]].fingerprint, target.fingerprint) == sims[k]);

  auto least = sample_candidates(pool, target, 5, SimilarityMode::LeastSimilar, 0);
  CHECK(chem::tanimoto(pool[least.others[0]].fingerprint, target.fingerprint) == sims.back());

  auto r1 = sample_candidates(pool, target, 8, SimilarityMode::Random, 77);
  auto r2 = sample_candidates(pool, target, 8, SimilarityMode::Random, 77);
  CHECK(r1.others == r2.others);
  auto r3 = sample_candidates(pool, target, 15, SimilarityMode::Random, 77);
  CHECK(std::equal(r1.others.begin(), r1.others.end(), r3.others.begin()));
  for (std::size_t i : r3.others) CHECK(i != 3);

  auto all = sample_candidates(pool, target, 50, SimilarityMode::Random, 1);
  CHECK(all.shortfall);
  CHECK(all.size() == 20);
}

TEST_CASE("superset monotonicity with fixed predictions") {
  Rng rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> s(300);
    for (double& v : s) v = static_cast<double>(rng.below(50));
    std::vector<std::size_t> order(299);
    std::iota(order.begin(), order.end(), 1);
    rng.shuffle(order);
    double prev = 0;
    for (std::size_t size : {50, 100, 250}) {
      std::vector<double> sub = {s[0]};
      for (std::size_t k = 0; k + 1 < size; ++k) sub.push_back(s[order[k]]);
      const double r = mid_rank(sub, 0);
      CHECK(r >= prev);
      prev = r;
    }
  }
}

TEST_CASE("ranking report") {
  std::ostringstream os;
  write_ranking_report(os, {{"q1", "a", 0.5, true}, {"q1", "b", 0.25, false}});
  CHECK(os.str() == "query_id\tcandidate_id\tsimilarity\trank_flag\nq1\ta\t0.5\t1\nq1\tb\t0.25\t0\n");
}

#include "esp/ranking/ranking.hpp"

#include <algorithm>
#include <cstdio>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>

#include "esp/chem/formula.hpp"
#include "esp/chem/molecule_table.hpp"
#include "esp/chem/smiles.hpp"
#include "esp/common/error.hpp"
#include "esp/common/rng.hpp"
#include "esp/spectra/spectrum.hpp"

namespace esp::ranking {

double mid_rank(std::span<const double> s, std::size_t target) {
  if (s.empty()) throw Error(ErrorCode::EmptyCandidateSet, "no candidates to rank");
  if (target >= s.size())
    throw Error(ErrorCode::TargetIndexOutOfRange,
                "target index " + std::to_string(target) + " with " + std::to_string(s.size()) + " candidates");
  const double st = s[target];
  std::size_t greater = 0, ties = 0;
  for (std::size_t c = 0; c < s.size(); ++c) {
    if (c == target) continue;
    if (s[c] > st)
      ++greater;
    else if (s[c] == st)
      ++ties;
  }
  return 1.0 + static_cast<double>(greater) + static_cast<double>(ties) / 2.0;
}

RankResult rank_from_similarities(std::vector<double> similarities, std::size_t target, std::string tag) {
  RankResult r;
  r.rank = mid_rank(similarities, target);
  r.similarities = std::move(similarities);
  r.target_index = target;
  r.model_tag = std::move(tag);
  return r;
}

RankResult rank_candidates(std::span<const double> query, const std::vector<std::vector<double>>& predicted,
                           std::size_t target, std::string tag) {
  std::vector<double> s;
  s.reserve(predicted.size());
  for (const auto& p : predicted) s.push_back(spectra::cosine_similarity(p, query));
  return rank_from_similarities(std::move(s), target, std::move(tag));
}

double average_rank(std::span<const double> ranks) {
  if (ranks.empty()) return 0.0;
  return std::accumulate(ranks.begin(), ranks.end(), 0.0) / static_cast<double>(ranks.size());
}

double average_rank(const std::vector<RankResult>& results) {
  std::vector<double> r;
  for (const auto& x : results) r.push_back(x.rank);
  return average_rank(r);
}

double rank_at_k(std::span<const double> ranks, double k) {
  if (ranks.empty()) return 0.0;
  std::size_t hit = 0;
  for (double r : ranks) hit += r <= k;
  return static_cast<double>(hit) / static_cast<double>(ranks.size());
}

double rank_at_k(const std::vector<RankResult>& results, double k) {
  std::vector<double> r;
  for (const auto& x : results) r.push_back(x.rank);
  return rank_at_k(r, k);
}

std::vector<StratifiedQuery> stratify_by_formula(const std::vector<StratifyItem>& items) {
  std::map<std::string, std::set<std::size_t>> groups;
  for (const auto& it : items) groups[it.formula].insert(it.molecule);
  std::vector<StratifiedQuery> out;
  out.reserve(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) {
    StratifiedQuery q;
    q.item = i;
    q.formula = items[i].formula;
    const auto& g = groups[q.formula];
    q.candidates.assign(g.begin(), g.end());
    q.target_position = static_cast<std::size_t>(
        std::lower_bound(q.candidates.begin(), q.candidates.end(), items[i].molecule) - q.candidates.begin());
    out.push_back(std::move(q));
  }
  return out;
}

std::size_t group_count(const std::vector<StratifiedQuery>& queries) {
  std::set<std::string> f;
  for (const auto& q : queries) f.insert(q.formula);
  return f.size();
}

CatalogEntry make_catalog_entry(std::string id, const chem::Molecule& m) {
  CatalogEntry e;
  e.id = std::move(id);
  e.smiles = m.source_smiles().empty() ? chem::render_smiles(m) : m.source_smiles();
  e.molecule = m;
  e.fingerprint = chem::circular_fingerprint(m);
  e.signature = chem::canonical_signature(m);
  return e;
}

CandidateCatalog load_candidate_catalog(std::istream& in, bool strict, std::vector<std::string>* warnings) {
  CandidateCatalog catalog;
  std::string line;
  std::size_t lineno = 0, rows = 0;
  auto warn = [&](const std::string& w) {
    if (warnings) warnings->push_back(w);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto f = chem::split_tabs(line);
    if (f.size() < 3)
      throw Error(ErrorCode::InvalidArgument, "catalog line needs formula, id and smiles", lineno);
    chem::Molecule m;
    try {
      m = chem::parse_smiles(f[2]);
    } catch (const Error& e) {
      if (strict) throw Error(e.code(), "catalog line " + std::to_string(lineno) + ": " + e.what(), lineno);
      warn("line " + std::to_string(lineno) + ": skipped, " + e.what());
      continue;
    }
    const std::string actual = chem::molecular_formula(m).to_string();
    std::string declared = f[0];
    try {
      declared = chem::Formula::parse(f[0]).to_string();
    } catch (const Error&) {
    }
    if (declared != actual) {
      const std::string msg = "line " + std::to_string(lineno) + ": " + f[1] + " declared " + f[0] +
                              " but the structure is " + actual;
      if (strict) throw Error(ErrorCode::FormulaMismatch, msg, lineno);
      warn(msg + ", skipped");
      continue;
    }
    catalog[actual].push_back(make_catalog_entry(f[1], m));
    ++rows;
  }
  if (rows == 0) warn("candidate catalog is empty");
  return catalog;
}

SimilarityMode parse_similarity_mode(const std::string& text) {
  if (text == "random") return SimilarityMode::Random;
  if (text == "most" || text == "most_similar") return SimilarityMode::MostSimilar;
  if (text == "least" || text == "least_similar") return SimilarityMode::LeastSimilar;
  throw Error(ErrorCode::BadConfig, "unknown candidate mode '" + text + "'");
}

std::string to_string(SimilarityMode mode) {
  switch (mode) {
    case SimilarityMode::Random:
      return "random";
    case SimilarityMode::MostSimilar:
      return "most";
    case SimilarityMode::LeastSimilar:
      return "least";
  }
  return "random";
}

CandidateSample sample_candidates(const std::vector<CatalogEntry>& pool, const CatalogEntry& target,
                                  std::size_t size, SimilarityMode mode, std::uint64_t seed) {
  if (size == 0) throw Error(ErrorCode::InvalidArgument, "candidate set size must be positive");
  CandidateSample out;
  out.requested = size;
  std::vector<std::size_t> others;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (!out.target_in_pool && pool[i].signature == target.signature) {
      out.target_in_pool = i;
      continue;
    }
    others.push_back(i);
  }
  const std::size_t want = size - 1;
  out.shortfall = others.size() < want;

  if (mode == SimilarityMode::Random) {
    Rng rng(seed);
    rng.shuffle(others);
  } else {
    std::vector<double> sim(pool.size(), 0.0);
    for (std::size_t i : others) sim[i] = chem::tanimoto(pool[i].fingerprint, target.fingerprint);
    const bool most = mode == SimilarityMode::MostSimilar;
    std::stable_sort(others.begin(), others.end(), [&](std::size_t a, std::size_t b) {
      return most ? sim[a] > sim[b] : sim[a] < sim[b];
    });
  }
  if (others.size() > want) others.resize(want);
  out.others = std::move(others);
  return out;
}

void write_ranking_report(std::ostream& out, const std::vector<ReportRow>& rows) {
  out << "query_id\tcandidate_id\tsimilarity\trank_flag\n";
  char buf[64];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.17g", r.similarity);
    out << r.query_id << '\t' << r.candidate_id << '\t' << buf << '\t' << (r.is_target ? 1 : 0) << '\n';
  }
}

}  // namespace esp::ranking

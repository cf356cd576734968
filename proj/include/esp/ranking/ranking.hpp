#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "esp/chem/fingerprint.hpp"
#include "esp/chem/molecule.hpp"

namespace esp::ranking {

struct RankResult {
  /// 1 + #{c : s_c > s_t} + #{c != t : s_c == s_t} / 2.
  double rank = 1.0;
  std::vector<double> similarities;
  std::size_t target_index = 0;
  std::string model_tag;
};

/// Mid-rank of `target` under the tie rule above. Throws EmptyCandidateSet
/// or TargetIndexOutOfRange.
double mid_rank(std::span<const double> similarities, std::size_t target);

RankResult rank_from_similarities(std::vector<double> similarities, std::size_t target, std::string tag = {});

/// s_c = cos(predicted_c, query).
RankResult rank_candidates(std::span<const double> query, const std::vector<std::vector<double>>& predicted,
                           std::size_t target, std::string tag = {});

double average_rank(std::span<const double> ranks);
double average_rank(const std::vector<RankResult>& results);
/// Fraction of results with rank <= k.
double rank_at_k(std::span<const double> ranks, double k);
double rank_at_k(const std::vector<RankResult>& results, double k);

/// One query per dataset item. Candidates are the distinct molecules that
/// share the item's formula, the target included.
struct StratifiedQuery {
  std::size_t item = 0;
  std::string formula;
  std::vector<std::size_t> candidates;  // molecule indices, ascending
  std::size_t target_position = 0;      // position of the item's molecule in `candidates`
  bool singleton() const { return candidates.size() < 2; }
};

struct StratifyItem {
  std::size_t molecule = 0;
  std::string formula;
};

std::vector<StratifiedQuery> stratify_by_formula(const std::vector<StratifyItem>& items);
std::size_t group_count(const std::vector<StratifiedQuery>& queries);

struct CatalogEntry {
  std::string id;
  std::string smiles;
  chem::Molecule molecule;
  chem::Fingerprint fingerprint;
  std::string signature;
};

/// Keyed by Hill formula text.
using CandidateCatalog = std::map<std::string, std::vector<CatalogEntry>>;

/// Reads `formula<TAB>id<TAB>smiles`. A declared formula that disagrees with
/// the structure throws FormulaMismatch when `strict`, else the row is skipped
/// with a warning. An empty input yields an empty catalog and a warning.
CandidateCatalog load_candidate_catalog(std::istream& in, bool strict = true,
                                        std::vector<std::string>* warnings = nullptr);

CatalogEntry make_catalog_entry(std::string id, const chem::Molecule& m);

enum class SimilarityMode { Random, MostSimilar, LeastSimilar };
SimilarityMode parse_similarity_mode(const std::string& text);
std::string to_string(SimilarityMode mode);

struct CandidateSample {
  /// Pool indices of the non-target candidates, in selection order.
  std::vector<std::size_t> others;
  /// Where the target sits in the pool, if it is there at all.
  std::optional<std::size_t> target_in_pool;
  std::size_t requested = 0;
  bool shortfall = false;
  std::size_t size() const { return others.size() + 1; }
};

/// Draw a candidate set of `size` molecules (target included) from `pool`.
/// Random mode takes a prefix of a seeded permutation, so for a fixed seed a
/// smaller set is always a subset of a larger one. Similarity modes order by
/// Tanimoto to the target, breaking ties by pool index.
CandidateSample sample_candidates(const std::vector<CatalogEntry>& pool, const CatalogEntry& target,
                                  std::size_t size, SimilarityMode mode, std::uint64_t seed);

struct ReportRow {
  std::string query_id;
  std::string candidate_id;
  double similarity = 0.0;
  bool is_target = false;
};

/// `query_id<TAB>candidate_id<TAB>similarity<TAB>rank_flag` with a header;
/// rank_flag is 1 on the target's row.
void write_ranking_report(std::ostream& out, const std::vector<ReportRow>& rows);

}  // namespace esp::ranking

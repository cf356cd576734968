#include "esp/pipeline/experiments.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ostream>
#include <thread>

#include "esp/common/error.hpp"
#include "esp/common/rng.hpp"
#include "esp/model/heads.hpp"
#include "esp/pipeline/trainer.hpp"
#include "json.hpp"

namespace esp::pipeline {

using nlohmann::json;

const std::vector<double>& PredictionCache::get(const chem::Molecule& mol, const spectra::BinnedSpectrum& query) {
  const std::string key = query.instrument.key() + "|" + std::to_string(std::lround(query.precursor_mz));
  auto [it, fresh] = predictions_.try_emplace({&mol, key});
  if (fresh) {
    const chem::Fingerprint* fp = nullptr;
    if (model_.config().kind == model::EncoderKind::Mlp) {
      auto f = fingerprints_.find(&mol);
      if (f == fingerprints_.end()) f = fingerprints_.emplace(&mol, model_fingerprint(model_.config(), mol)).first;
      fp = &f->second;
    }
    it->second = predict_for(model_, mol, fp, query);
  }
  return it->second;
}

EnsembleData build_ensemble_data(const Dataset& d, const model::SpectrumModel& mlp, const model::SpectrumModel& gnn,
                                 bool sqrt_intensity) {
  PredictionCache cm(mlp), cg(gnn);
  EnsembleData out;
  auto collect = [&](const ValidationQuery& q, ensemble::RankingQuery& rq) {
    const auto& r = d.records[q.record];
    const auto& spec = r.spectra[q.spectrum].spectrum;
    rq.query_id = r.id + "#" + std::to_string(q.spectrum);
    rq.query = target_vector(spec, sqrt_intensity);
    rq.target = q.target;
    for (std::size_t c : q.candidates) {
      rq.mlp.push_back(cm.get(d.records[c].molecule, spec));
      rq.gnn.push_back(cg.get(d.records[c].molecule, spec));
    }
  };
  for (const auto& q : stratified_queries(d, Split::Train, {Split::Train})) {
    ensemble::RankingQuery rq;
    collect(q, rq);
    ensemble::EnsembleExample ex;
    ex.query_id = rq.query_id;
    ex.rank_mlp = ranking::rank_candidates(rq.query, rq.mlp, rq.target).rank;
    ex.rank_gnn = ranking::rank_candidates(rq.query, rq.gnn, rq.target).rank;
    ex.loss_mlp = model::spectral_loss(rq.mlp[rq.target], rq.query);
    ex.loss_gnn = model::spectral_loss(rq.gnn[rq.target], rq.query);
    ex.query = std::move(rq.query);
    out.examples.push_back(std::move(ex));
  }
  for (const auto& q : stratified_queries(d, Split::Val)) {
    ensemble::RankingQuery rq;
    collect(q, rq);
    out.validation.push_back(std::move(rq));
  }
  return out;
}

ensemble::ClassifierConfig classifier_config_from(const Config& c) {
  ensemble::ClassifierConfig e;
  e.bins = static_cast<std::size_t>(c.get_int("bins", static_cast<long long>(e.bins)));
  e.hidden = static_cast<std::size_t>(c.get_int("ens_hidden", static_cast<long long>(e.hidden)));
  e.layers = static_cast<std::size_t>(c.get_int("ens_layers", static_cast<long long>(e.layers)));
  e.dropout = c.get_double("ens_dropout", e.dropout);
  e.max_epochs = static_cast<std::size_t>(c.get_int("ens_epochs", static_cast<long long>(e.max_epochs)));
  e.patience = static_cast<std::size_t>(c.get_int("ens_patience", static_cast<long long>(e.patience)));
  e.batch_size = static_cast<std::size_t>(c.get_int("ens_batch_size", static_cast<long long>(e.batch_size)));
  e.adam.lr = c.get_double("ens_lr", e.adam.lr);
  e.adam.weight_decay = c.get_double("ens_weight_decay", e.adam.weight_decay);
  e.hard_blend = c.get_bool("ens_hard_blend", e.hard_blend);
  e.seed = static_cast<std::uint64_t>(c.get_int("seed", static_cast<long long>(e.seed)));
  if (e.batch_size == 0 || e.layers == 0) throw Error(ErrorCode::BadConfig, "ensemble batch size and depth must be positive");
  return e;
}

Config to_config(const ensemble::ClassifierConfig& e) {
  auto fmt = [](double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  Config c;
  c.set("bins", std::to_string(e.bins));
  c.set("ens_hidden", std::to_string(e.hidden));
  c.set("ens_layers", std::to_string(e.layers));
  c.set("ens_dropout", fmt(e.dropout));
  c.set("ens_epochs", std::to_string(e.max_epochs));
  c.set("ens_patience", std::to_string(e.patience));
  c.set("ens_batch_size", std::to_string(e.batch_size));
  c.set("ens_lr", fmt(e.adam.lr));
  c.set("ens_weight_decay", fmt(e.adam.weight_decay));
  c.set("ens_hard_blend", e.hard_blend ? "true" : "false");
  c.set("seed", std::to_string(e.seed));
  return c;
}

Checkpoint ensemble_checkpoint(const ensemble::EnsembleClassifier& classifier, ensemble::LabelSource source,
                               ensemble::Weighting weighting, const ensemble::EnsembleTrainingLog& log) {
  Checkpoint c;
  c.seed = classifier.config().seed;
  c.config = to_config(classifier.config()).to_string();
  json val = json::array();
  for (double v : log.val_average_rank) val.push_back(std::isfinite(v) ? json(v) : json(nullptr));
  json meta = {{"role", "ensemble"},
               {"label_source", ensemble::to_string(source)},
               {"weighting", ensemble::to_string(weighting)},
               {"best_epoch", log.best_epoch},
               {"informative", log.informative},
               {"train_loss", log.train_loss},
               {"val_average_rank", std::move(val)}};
  c.meta = meta.dump();
  const auto& ps = classifier.params();
  for (std::size_t p = 0; p < ps.count(); ++p) {
    const auto& param = ps.at(p);
    c.put("param/" + param.name(), param.rows(), param.cols(), param.value);
  }
  return c;
}

std::unique_ptr<ensemble::EnsembleClassifier> load_ensemble(const Checkpoint& ckpt) {
  const json meta = json::parse(ckpt.meta);
  if (meta.value("role", "") != "ensemble") throw Error(ErrorCode::InvalidArgument, "checkpoint does not hold an ensemble");
  const auto cfg = classifier_config_from(Config::parse(ckpt.config));
  auto e = std::make_unique<ensemble::EnsembleClassifier>(cfg, cfg.seed);
  auto& ps = e->params();
  for (std::size_t p = 0; p < ps.count(); ++p) {
    auto& param = ps.at(p);
    param.value = ckpt.values("param/" + param.name(), param.rows(), param.cols());
  }
  return e;
}

ExperimentKind parse_experiment_kind(const std::string& text) {
  if (text == "cand_size") return ExperimentKind::CandSize;
  if (text == "cand_similarity") return ExperimentKind::CandSimilarity;
  if (text == "realistic") return ExperimentKind::Realistic;
  if (text == "full_positive") return ExperimentKind::FullPositive;
  throw Error(ErrorCode::InvalidArgument, "unknown experiment '" + text + "'");
}

std::string to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::CandSize: return "cand_size";
    case ExperimentKind::CandSimilarity: return "cand_similarity";
    case ExperimentKind::Realistic: return "realistic";
    case ExperimentKind::FullPositive: return "full_positive";
  }
  return "?";
}

ranking::CandidateCatalog dataset_catalog(const Dataset& d) {
  ranking::CandidateCatalog c;
  for (const auto& r : d.records) c[r.formula.to_string()].push_back(ranking::make_catalog_entry(r.id, r.molecule));
  return c;
}

std::size_t threads_from_env() {
  const char* v = std::getenv("ESP_THREADS");
  if (!v) return 1;
  char* end = nullptr;
  const long n = std::strtol(v, &end, 10);
  return (end != v && *end == '\0' && n > 0) ? static_cast<std::size_t>(n) : 1;
}

namespace {

struct Condition {
  std::string label;
  std::size_t size;
  ranking::SimilarityMode mode;
  bool protonated_only;
};

std::vector<Condition> conditions_for(const ExperimentConfig& c) {
  using ranking::SimilarityMode;
  std::vector<Condition> out;
  switch (c.kind) {
    case ExperimentKind::CandSize:
      for (std::size_t s : c.sizes) out.push_back({"size=" + std::to_string(s), s, SimilarityMode::Random, false});
      break;
    case ExperimentKind::CandSimilarity:
      for (auto m : {SimilarityMode::Random, SimilarityMode::MostSimilar, SimilarityMode::LeastSimilar})
        out.push_back({ranking::to_string(m), c.default_size, m, false});
      break;
    case ExperimentKind::Realistic:
      out.push_back({"realistic", c.default_size, SimilarityMode::Random, false});
      break;
    case ExperimentKind::FullPositive:
      out.push_back({"all", c.default_size, SimilarityMode::Random, false});
      out.push_back({"[M+H]+", c.default_size, SimilarityMode::Random, true});
      break;
  }
  return out;
}

struct Query {
  std::size_t record;
  std::size_t spectrum;
};

}  // namespace

ExperimentReport run_experiment(const Dataset& d, const ranking::CandidateCatalog& catalog, const Predictors& p,
                                const ExperimentConfig& config) {
  if (!p.mlp || !p.gnn) throw Error(ErrorCode::InvalidArgument, "both spectrum models are required");
  const auto conds = conditions_for(config);
  ExperimentReport report;
  report.experiment = to_string(config.kind);
  for (const auto& c : conds) report.conditions.push_back(c.label);
  report.models = {"MLP-PD", "GNN-PD"};
  if (p.ensemble) report.models.push_back("ESP");

  std::vector<Query> queries;
  for (std::size_t i : d.indices(config.split))
    for (std::size_t s = 0; s < d.records[i].spectra.size(); ++s) queries.push_back({i, s});

  std::vector<std::vector<QueryRank>> per_query(queries.size());
  std::vector<char> skipped(queries.size(), 0);
  static const std::vector<ranking::CatalogEntry> kEmpty;

  auto work = [&](std::size_t worker, std::size_t stride) {
    PredictionCache cm(*p.mlp), cg(*p.gnn);
    for (std::size_t qi = worker; qi < queries.size(); qi += stride) {
      const auto& r = d.records[queries[qi].record];
      const auto& spec = r.spectra[queries[qi].spectrum].spectrum;
      auto it = catalog.find(r.formula.to_string());
      const auto& pool = it == catalog.end() ? kEmpty : it->second;
      const ranking::CatalogEntry target = ranking::make_catalog_entry(r.id, r.molecule);
      const std::string qid = r.id + "#" + std::to_string(queries[qi].spectrum);
      ensemble::RankingQuery rq;
      rq.query_id = qid;
      rq.query = target_vector(spec, config.sqrt_intensity);
      for (const auto& c : conds) {
        if (c.protonated_only && spec.instrument.precursor_type() != "[M+H]+") continue;
        const auto sample =
            ranking::sample_candidates(pool, target, c.size, c.mode, Rng::derive(config.seed, queries[qi].record));
        if (sample.others.empty()) {
          skipped[qi] = 1;
          break;
        }
        rq.mlp.assign(1, cm.get(r.molecule, spec));
        rq.gnn.assign(1, cg.get(r.molecule, spec));
        rq.target = 0;
        for (std::size_t o : sample.others) {
          rq.mlp.push_back(cm.get(pool[o].molecule, spec));
          rq.gnn.push_back(cg.get(pool[o].molecule, spec));
        }
        const std::size_t n = sample.size();
        per_query[qi].push_back({c.label, qid, "MLP-PD", n, ranking::rank_candidates(rq.query, rq.mlp, 0).rank});
        per_query[qi].push_back({c.label, qid, "GNN-PD", n, ranking::rank_candidates(rq.query, rq.gnn, 0).rank});
        if (p.ensemble) per_query[qi].push_back({c.label, qid, "ESP", n, ensemble::esp_rank(rq, *p.ensemble).rank});
      }
    }
  };
  const std::size_t threads = std::max<std::size_t>(1, std::min(config.threads, queries.size()));
  if (threads == 1) {
    work(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(work, t, threads);
    for (auto& t : pool) t.join();
  }
  for (std::size_t qi = 0; qi < queries.size(); ++qi) {
    if (skipped[qi]) {
      ++report.skipped_queries;
      continue;
    }
    for (auto& row : per_query[qi]) report.ranks.push_back(std::move(row));
  }
  return report;
}

namespace {

std::vector<double> ranks_for(const ExperimentReport& r, const std::string& cond, const std::string& model) {
  std::vector<double> out;
  for (const auto& q : r.ranks)
    if (q.condition == cond && q.model == model) out.push_back(q.rank);
  return out;
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void write_summary(std::ostream& out, const ExperimentReport& r, std::size_t max_k) {
  out << "experiment\tcondition\tmodel\tqueries\taverage_rank";
  for (std::size_t k = 1; k <= max_k; ++k) out << "\trank_at_" << k;
  out << '\n';
  for (const auto& c : r.conditions)
    for (const auto& m : r.models) {
      const auto ranks = ranks_for(r, c, m);
      if (ranks.empty()) continue;
      out << r.experiment << '\t' << c << '\t' << m << '\t' << ranks.size() << '\t' << num(ranking::average_rank(ranks));
      for (std::size_t k = 1; k <= max_k; ++k) out << '\t' << num(ranking::rank_at_k(ranks, static_cast<double>(k)));
      out << '\n';
    }
}

void write_long_table(std::ostream& out, const ExperimentReport& r, std::size_t max_k) {
  out << "experiment\tcondition\tmodel\tk\trank_at_k\n";
  for (const auto& c : r.conditions)
    for (const auto& m : r.models) {
      const auto ranks = ranks_for(r, c, m);
      if (ranks.empty()) continue;
      for (std::size_t k = 1; k <= max_k; ++k)
        out << r.experiment << '\t' << c << '\t' << m << '\t' << k << '\t'
            << num(ranking::rank_at_k(ranks, static_cast<double>(k))) << '\n';
    }
}

void write_query_ranks(std::ostream& out, const ExperimentReport& r) {
  out << "experiment\tcondition\tquery_id\tmodel\tcandidates\trank\n";
  for (const auto& q : r.ranks)
    out << r.experiment << '\t' << q.condition << '\t' << q.query_id << '\t' << q.model << '\t' << q.candidates << '\t'
        << num(q.rank) << '\n';
}

}  // namespace esp::pipeline

#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>

#include "esp/chem/molecule_table.hpp"
#include "esp/chem/smiles.hpp"
#include "esp/common/error.hpp"
#include "esp/common/rng.hpp"
#include "esp/ensemble/ensemble.hpp"
#include "esp/pipeline/checkpoint.hpp"
#include "esp/pipeline/config.hpp"
#include "esp/pipeline/dataset.hpp"
#include "esp/pipeline/experiments.hpp"
#include "esp/pipeline/synthetic.hpp"
#include "esp/pipeline/trainer.hpp"
#include "esp/topics/lda.hpp"

namespace esp::cli {

using namespace esp::pipeline;

namespace {

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path);
  return out;
}

void print_warnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

bool trainer_is_better(const TrainHistory& a, const TrainHistory& b) {
  const bool fa = std::isfinite(a.best_val_rank), fb = std::isfinite(b.best_val_rank);
  if (fa != fb) return fa;
  if (fa && a.best_val_rank != b.best_val_rank) return a.best_val_rank < b.best_val_rank;
  return a.best_train_loss < b.best_train_loss;
}

void write_history(const std::string& path, const TrainHistory& h) {
  auto out = open_out(path);
  out << "epoch\ttrain_loss\ttrain_spectral\tval_average_rank\n";
  for (std::size_t e = 0; e < h.train_loss.size(); ++e) {
    char line[160];
    std::snprintf(line, sizeof line, "%zu\t%.17g\t%.17g\t%.17g\n", e + 1, h.train_loss[e], h.train_spectral[e],
                  h.val_average_rank[e]);
    out << line;
  }
}

bool config_sqrt(const Checkpoint& c) { return train_config_from(Config::parse(c.config)).sqrt_intensity; }

}  // namespace

void register_ingest(CLI::App& app) {
  struct Opts {
    std::string msp, molecules, out;
    std::size_t bins = 1000, max_spectra = 5;
    std::uint64_t seed = 0;
    bool lenient = false;
  };
  auto o = std::make_shared<Opts>();
  auto* cmd = app.add_subcommand("ingest", "Join MSP spectra to a molecule table and write a dataset");
  cmd->add_option("--msp", o->msp, "MSP spectral library")->required();
  cmd->add_option("--molecules", o->molecules, "id<TAB>smiles[<TAB>formula] table")->required();
  cmd->add_option("--out", o->out, "Dataset JSON to write")->required();
  cmd->add_option("--bins", o->bins, "Number of 1-Da bins")->capture_default_str();
  cmd->add_option("--max-spectra", o->max_spectra, "Spectra kept per molecule (drawn with replacement)")
      ->capture_default_str();
  cmd->add_option("--seed", o->seed, "Seed for spectrum sampling")->capture_default_str();
  cmd->add_flag("--lenient", o->lenient, "Skip molecules whose declared formula disagrees instead of failing");
  cmd->callback([o] {
    std::vector<std::string> warnings;
    auto mol_in = open_in(o->molecules);
    auto molecules = chem::read_molecule_table(mol_in, !o->lenient, &warnings);
    auto msp_in = open_in(o->msp);
    auto records = spectra::parse_msp(msp_in);
    Dataset d = ingest(records, molecules, o->bins, &warnings);
    d = sample_spectra(d, o->max_spectra, o->seed);
    print_warnings(warnings);
    save_dataset_file(o->out, d);
    std::cout << "molecules\t" << d.records.size() << "\nspectra\t" << d.spectrum_count() << "\n";
  });
}

void register_split(CLI::App& app) {
  struct Opts {
    std::string dataset, out, mode = "random";
    std::uint64_t seed = 0;
    std::size_t clusters = 50, train_clusters = 29;
  };
  auto o = std::make_shared<Opts>();
  auto* cmd = app.add_subcommand("split", "Assign molecules to train/val/test");
  cmd->add_option("--dataset", o->dataset, "Dataset JSON")->required();
  cmd->add_option("--out", o->out, "Output dataset (default: overwrite --dataset)");
  cmd->add_option("--mode", o->mode, "random (8:1:1) or realistic (structural clusters)")
      ->check(CLI::IsMember({"random", "realistic"}))
      ->capture_default_str();
  cmd->add_option("--seed", o->seed)->capture_default_str();
  cmd->add_option("--clusters", o->clusters, "Cluster count for the realistic split")->capture_default_str();
  cmd->add_option("--train-clusters", o->train_clusters, "Largest clusters assigned to training")
      ->capture_default_str();
  cmd->callback([o] {
    Dataset d = load_dataset_file(o->dataset);
    std::vector<std::string> ids;
    for (const auto& r : d.records) ids.push_back(r.id);
    if (o->mode == "random") {
      apply_split(d, split_random(ids, o->seed));
    } else {
      std::vector<chem::Fingerprint> fps;
      for (const auto& r : d.records) fps.push_back(chem::circular_fingerprint(r.molecule));
      apply_split(d, split_realistic(ids, fps, o->clusters, o->train_clusters, o->seed).split);
    }
    save_dataset_file(o->out.empty() ? o->dataset : o->out, d);
    for (Split s : {Split::Train, Split::Val, Split::Test})
      std::cout << to_string(s) << "\t" << d.indices(s).size() << "\n";
  });
}

void register_lda(CLI::App& app) {
  struct Opts {
    std::string dataset, out;
    std::size_t topics = 100, iterations = 200, top = 5;
    int quantization = 20;
    std::uint64_t seed = 0;
  };
  auto o = std::make_shared<Opts>();
  auto* lda = app.add_subcommand("lda", "Spectral topic model");
  lda->require_subcommand(1);
  auto* cmd = lda->add_subcommand("fit", "Fit LDA on training spectra (all spectra when no split is set)");
  cmd->add_option("--dataset", o->dataset, "Dataset JSON")->required();
  cmd->add_option("--topics", o->topics, "Number of topics")->capture_default_str();
  cmd->add_option("--iterations", o->iterations, "Gibbs sweeps")->capture_default_str();
  cmd->add_option("--quantization", o->quantization, "Peak count of the base peak")->capture_default_str();
  cmd->add_option("--seed", o->seed)->capture_default_str();
  cmd->add_option("--top", o->top, "Bins listed per topic")->capture_default_str();
  cmd->add_option("--out", o->out, "Write the topic-word matrix as a checkpoint");
  cmd->callback([o] {
    Dataset d = load_dataset_file(o->dataset);
    auto idx = d.indices(Split::Train);
    if (idx.empty())
      for (std::size_t i = 0; i < d.records.size(); ++i) idx.push_back(i);
    std::vector<spectra::PeakDocument> docs;
    for (std::size_t i : idx)
      for (const auto& s : d.records[i].spectra) docs.push_back(spectra::to_peak_document(s.spectrum, o->quantization));
    topics::LdaConfig cfg;
    cfg.topics = o->topics;
    cfg.iterations = o->iterations;
    cfg.seed = o->seed;
    auto model = topics::fit_lda(docs, d.bins, cfg);
    std::cout << "topic\ttop_bins\n";
    for (std::size_t t = 0; t < model.topics(); ++t) {
      std::vector<std::size_t> order(model.vocabulary());
      for (std::size_t w = 0; w < order.size(); ++w) order[w] = w;
      std::partial_sort(order.begin(), order.begin() + static_cast<long>(std::min(o->top, order.size())), order.end(),
                        [&](std::size_t a, std::size_t b) { return model.phi(t, a) > model.phi(t, b); });
      std::cout << t;
      for (std::size_t k = 0; k < std::min(o->top, order.size()); ++k)
        std::cout << (k ? "," : "\t") << order[k] << ":" << num(model.phi(t, order[k]));
      std::cout << "\n";
    }
    if (!o->out.empty()) {
      Checkpoint c;
      c.seed = o->seed;
      c.meta = "{\"role\":\"topics\",\"alpha\":" + num(model.alpha()) + ",\"beta\":" + num(model.beta()) + "}";
      c.put("lda/phi", model.topics(), model.vocabulary(), model.phi());
      save_checkpoint(o->out, c);
    }
  });
}

void register_train(CLI::App& app) {
  struct Opts {
    std::string model, config, dataset, out, resume, history;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> epochs;
    std::size_t checkpoint_every = 0;
  };
  auto o = std::make_shared<Opts>();
  auto* cmd = app.add_subcommand("train", "Train an MLP-PD or GNN-PD spectrum model");
  cmd->add_option("--model", o->model, "mlp-pd or gnn-pd")->check(CLI::IsMember({"mlp-pd", "gnn-pd", "mlp", "gnn"}));
  cmd->add_option("--config", o->config, "key = value file; comma lists are expanded as a grid");
  cmd->add_option("--dataset", o->dataset, "Dataset JSON with a split")->required();
  cmd->add_option("--out", o->out, "Checkpoint to write")->required();
  cmd->add_option("--seed", o->seed, "Overrides the config seed");
  cmd->add_option("--epochs", o->epochs, "Overrides the config epoch count");
  cmd->add_option("--resume", o->resume, "Continue from a checkpoint");
  cmd->add_option("--history", o->history, "Per-epoch TSV of losses and validation rank");
  cmd->add_option("--checkpoint-every", o->checkpoint_every, "Also write --out every N epochs");
  cmd->callback([o] {
    Dataset d = load_dataset_file(o->dataset);
    if (!o->resume.empty()) {
      auto trainer = Trainer::resume(d, load_checkpoint(o->resume));
      trainer->run(o->epochs.value_or(0));
      save_checkpoint(o->out, trainer->checkpoint());
      if (!o->history.empty()) write_history(o->history, trainer->history());
      std::cout << "epochs\t" << trainer->epoch() << "\nbest_epoch\t" << trainer->history().best_epoch << "\n";
      return;
    }
    Config base = o->config.empty() ? Config{} : Config::load(o->config);
    if (!o->model.empty()) base.set("model", o->model);
    if (o->seed) base.set("seed", std::to_string(*o->seed));
    if (o->epochs) base.set("epochs", std::to_string(*o->epochs));
    if (!base.has("bins")) base.set("bins", std::to_string(d.bins));
    const auto grid = expand_grid(base);
    std::unique_ptr<Trainer> best;
    std::size_t best_index = 0;
    std::cout << "run\tbest_epoch\tval_average_rank\ttrain_loss\tconfig\n";
    for (std::size_t g = 0; g < grid.size(); ++g) {
      auto trainer = std::make_unique<Trainer>(d, train_config_from(grid[g]));
      trainer->run(0, [&](const Trainer& t) {
        if (grid.size() == 1 && o->checkpoint_every && t.epoch() % o->checkpoint_every == 0)
          save_checkpoint(o->out, t.checkpoint());
      });
      const auto& h = trainer->history();
      std::string summary = grid[g].to_string();
      std::replace(summary.begin(), summary.end(), '\n', ';');
      std::cout << g << "\t" << h.best_epoch << "\t" << num(h.best_val_rank) << "\t" << num(h.best_train_loss) << "\t"
                << summary << "\n";
      if (!best || trainer_is_better(h, best->history())) {
        best = std::move(trainer);
        best_index = g;
      }
    }
    save_checkpoint(o->out, best->checkpoint());
    if (!o->history.empty()) write_history(o->history, best->history());
    if (grid.size() > 1) std::cout << "selected\t" << best_index << "\n";
  });
}

void register_ensemble(CLI::App& app) {
  struct Opts {
    std::string mlp, gnn, dataset, out, config, report, label_source = "rank", weighting = "smape";
    std::optional<std::uint64_t> seed;
  };
  auto o = std::make_shared<Opts>();
  auto* ens = app.add_subcommand("ensemble", "Rank-trained ensemble of the two spectrum models");
  ens->require_subcommand(1);
  auto* cmd = ens->add_subcommand("train", "Train the ensemble classifier on training-set ranking results");
  cmd->add_option("--mlp", o->mlp, "MLP-PD checkpoint")->required();
  cmd->add_option("--gnn", o->gnn, "GNN-PD checkpoint")->required();
  cmd->add_option("--dataset", o->dataset, "Dataset JSON with a split")->required();
  cmd->add_option("--out", o->out, "Ensemble checkpoint to write")->required();
  cmd->add_option("--label-source", o->label_source, "rank (ESP) or loss (ESP-SL)")
      ->check(CLI::IsMember({"rank", "loss"}))
      ->capture_default_str();
  cmd->add_option("--weighting", o->weighting, "smape (ESP) or uniform (ESP-RU)")
      ->check(CLI::IsMember({"smape", "uniform"}))
      ->capture_default_str();
  cmd->add_option("--config", o->config, "key = value file with ens_* keys");
  cmd->add_option("--seed", o->seed);
  cmd->add_option("--report", o->report, "Per-example label TSV");
  cmd->callback([o] {
    Dataset d = load_dataset_file(o->dataset);
    const auto mlp_ck = load_checkpoint(o->mlp);
    auto mlp = load_model(mlp_ck);
    auto gnn = load_model(load_checkpoint(o->gnn));
    Config c = o->config.empty() ? Config{} : Config::load(o->config);
    if (o->seed) c.set("seed", std::to_string(*o->seed));
    if (!c.has("bins")) c.set("bins", std::to_string(d.bins));
    auto cfg = classifier_config_from(c);
    auto data = build_ensemble_data(d, *mlp, *gnn, config_sqrt(mlp_ck));
    const auto source = ensemble::parse_label_source(o->label_source);
    const auto weighting = ensemble::parse_weighting(o->weighting);
    ensemble::assign_labels(data.examples, source, weighting);
    ensemble::EnsembleTrainingLog log;
    auto clf = ensemble::train_ensemble(data.examples, data.validation, cfg, &log);
    save_checkpoint(o->out, ensemble_checkpoint(clf, source, weighting, log));
    if (!o->report.empty()) {
      auto out = open_out(o->report);
      ensemble::write_training_report(out, data.examples);
    }
    std::cout << "examples\t" << data.examples.size() << "\ninformative\t" << log.informative << "\nbest_epoch\t"
              << log.best_epoch << "\n";
  });
}

void register_rank(CLI::App& app) {
  struct Opts {
    std::string query, catalog, mlp, gnn, ensemble, out, model = "esp", mode = "random";
    std::size_t size = 100;
    std::uint64_t seed = 0;
    bool lenient = false;
  };
  auto o = std::make_shared<Opts>();
  auto* cmd = app.add_subcommand("rank", "Rank catalog candidates for query spectra");
  cmd->add_option("--query", o->query, "MSP file; records need a Formula or SMILES field")->required();
  cmd->add_option("--catalog", o->catalog, "formula<TAB>id<TAB>smiles table")->required();
  cmd->add_option("--size", o->size, "Candidate set size including the target")->capture_default_str();
  cmd->add_option("--mode", o->mode, "random, most or least (similarity modes need the query SMILES)")
      ->check(CLI::IsMember({"random", "most", "least"}))
      ->capture_default_str();
  cmd->add_option("--model", o->model, "esp, mlp-pd or gnn-pd")
      ->check(CLI::IsMember({"esp", "mlp-pd", "gnn-pd"}))
      ->capture_default_str();
  cmd->add_option("--mlp", o->mlp, "MLP-PD checkpoint");
  cmd->add_option("--gnn", o->gnn, "GNN-PD checkpoint");
  cmd->add_option("--ensemble", o->ensemble, "Ensemble checkpoint");
  cmd->add_option("--seed", o->seed)->capture_default_str();
  cmd->add_option("--out", o->out, "Report path (default: stdout)");
  cmd->add_flag("--lenient", o->lenient, "Skip catalog rows whose formula disagrees instead of failing");
  cmd->callback([o] {
    const bool need_mlp = o->model != "gnn-pd", need_gnn = o->model != "mlp-pd";
    if ((need_mlp && o->mlp.empty()) || (need_gnn && o->gnn.empty()) || (o->model == "esp" && o->ensemble.empty()))
      throw Error(ErrorCode::InvalidArgument, "--model " + o->model + " needs its checkpoints");
    std::unique_ptr<model::SpectrumModel> mlp, gnn;
    std::unique_ptr<ensemble::EnsembleClassifier> clf;
    bool sqrt_intensity = false;
    std::size_t bins = 0;
    if (need_mlp) {
      auto ck = load_checkpoint(o->mlp);
      sqrt_intensity = config_sqrt(ck);
      mlp = load_model(ck);
      bins = mlp->config().bins;
    }
    if (need_gnn) {
      auto ck = load_checkpoint(o->gnn);
      if (!need_mlp) sqrt_intensity = config_sqrt(ck);
      gnn = load_model(ck);
      bins = gnn->config().bins;
    }
    if (o->model == "esp") clf = load_ensemble(load_checkpoint(o->ensemble));

    std::vector<std::string> warnings;
    auto cat_in = open_in(o->catalog);
    const auto catalog = ranking::load_candidate_catalog(cat_in, !o->lenient, &warnings);
    auto q_in = open_in(o->query);
    const auto queries = spectra::parse_msp(q_in);
    std::unique_ptr<PredictionCache> cm, cg;
    if (mlp) cm = std::make_unique<PredictionCache>(*mlp);
    if (gnn) cg = std::make_unique<PredictionCache>(*gnn);
    static const std::vector<ranking::CatalogEntry> kEmpty;

    std::vector<ranking::ReportRow> rows;
    for (std::size_t qi = 0; qi < queries.size(); ++qi) {
      const auto& rec = queries[qi];
      std::optional<chem::Molecule> target;
      if (auto s = rec.find("SMILES")) target = chem::parse_smiles(*s);
      std::string formula;
      if (auto f = rec.find("Formula"))
        formula = chem::Formula::parse(*f).to_string();
      else if (target)
        formula = chem::molecular_formula(*target).to_string();
      else
        throw Error(ErrorCode::MalformedRecord, "query '" + rec.name + "' has neither Formula nor SMILES");
      auto it = catalog.find(formula);
      const auto& pool = it == catalog.end() ? kEmpty : it->second;

      spectra::BinnedSpectrum spec = spectra::bin_peaks(rec.peaks, bins);
      spec.instrument = rec.instrument();
      if (rec.precursor_mz)
        spec.precursor_mz = *rec.precursor_mz;
      else if (target)
        spec.precursor_mz = spectra::precursor_mz(chem::monoisotopic_mass(*target), spec.instrument.precursor_type());
      else
        throw Error(ErrorCode::MalformedRecord, "query '" + rec.name + "' has no precursor m/z");
      const auto query = target_vector(spec, sqrt_intensity);
      const std::uint64_t seed = Rng::derive(o->seed, qi);

      std::vector<const ranking::CatalogEntry*> cands;
      std::optional<ranking::CatalogEntry> target_entry;
      if (target) {
        target_entry = ranking::make_catalog_entry(rec.name, *target);
        const auto sample =
            ranking::sample_candidates(pool, *target_entry, o->size, ranking::parse_similarity_mode(o->mode), seed);
        cands.push_back(sample.target_in_pool ? &pool[*sample.target_in_pool] : &*target_entry);
        for (std::size_t i : sample.others) cands.push_back(&pool[i]);
      } else {
        if (o->mode != "random") throw Error(ErrorCode::InvalidArgument, "similarity modes need the query SMILES");
        std::vector<std::size_t> order(pool.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        Rng rng(seed);
        rng.shuffle(order);
        for (std::size_t k = 0; k < std::min(o->size, order.size()); ++k) cands.push_back(&pool[order[k]]);
      }
      if (cands.empty()) {
        warnings.push_back("query '" + rec.name + "' has no candidates for " + formula);
        continue;
      }
      ensemble::RankingQuery rq;
      rq.query_id = rec.name;
      rq.query = query;
      for (const auto* c : cands) {
        if (cm) rq.mlp.push_back(cm->get(c->molecule, spec));
        if (cg) rq.gnn.push_back(cg->get(c->molecule, spec));
      }
      ranking::RankResult res;
      if (o->model == "esp")
        res = ensemble::esp_rank(rq, *clf);
      else
        res = ranking::rank_candidates(rq.query, o->model == "mlp-pd" ? rq.mlp : rq.gnn, 0);
      std::vector<std::size_t> order(cands.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return res.similarities[a] > res.similarities[b]; });
      for (std::size_t i : order)
        rows.push_back({rec.name, cands[i]->id, res.similarities[i], i == 0 && target});
    }
    print_warnings(warnings);
    if (o->out.empty()) {
      ranking::write_ranking_report(std::cout, rows);
    } else {
      auto out = open_out(o->out);
      ranking::write_ranking_report(out, rows);
    }
  });
}

void register_eval(CLI::App& app) {
  struct Opts {
    std::string experiment, dataset, catalog, mlp, gnn, ensemble, out_dir = ".", split = "test";
    std::vector<std::size_t> sizes = {50, 100, 250, 1000};
    std::size_t size = 100;
    std::uint64_t seed = 0;
    bool lenient = false;
  };
  auto o = std::make_shared<Opts>();
  auto* cmd = app.add_subcommand("eval", "Candidate-ranking experiment over a dataset split");
  cmd->add_option("--experiment", o->experiment, "cand_size, cand_similarity, realistic or full_positive")
      ->check(CLI::IsMember({"cand_size", "cand_similarity", "realistic", "full_positive"}))
      ->required();
  cmd->add_option("--dataset", o->dataset, "Dataset JSON with a split")->required();
  cmd->add_option("--catalog", o->catalog, "Candidate catalog (default: the dataset's own molecules)");
  cmd->add_option("--mlp", o->mlp, "MLP-PD checkpoint")->required();
  cmd->add_option("--gnn", o->gnn, "GNN-PD checkpoint")->required();
  cmd->add_option("--ensemble", o->ensemble, "Ensemble checkpoint (adds ESP rows)");
  cmd->add_option("--out-dir", o->out_dir, "Directory for summary.tsv, curves.tsv and queries.tsv")
      ->capture_default_str();
  cmd->add_option("--sizes", o->sizes, "Candidate sizes for cand_size")->delimiter(',');
  cmd->add_option("--size", o->size, "Candidate size for the other experiments")->capture_default_str();
  cmd->add_option("--split", o->split, "Split to query")
      ->check(CLI::IsMember({"train", "val", "test"}))
      ->capture_default_str();
  cmd->add_option("--seed", o->seed)->capture_default_str();
  cmd->add_flag("--lenient", o->lenient, "Skip catalog rows whose formula disagrees instead of failing");
  cmd->callback([o] {
    Dataset d = load_dataset_file(o->dataset);
    const auto mlp_ck = load_checkpoint(o->mlp);
    auto mlp = load_model(mlp_ck);
    auto gnn = load_model(load_checkpoint(o->gnn));
    std::unique_ptr<ensemble::EnsembleClassifier> clf;
    if (!o->ensemble.empty()) clf = load_ensemble(load_checkpoint(o->ensemble));
    ranking::CandidateCatalog catalog;
    std::vector<std::string> warnings;
    if (o->catalog.empty()) {
      catalog = dataset_catalog(d);
    } else {
      auto in = open_in(o->catalog);
      catalog = ranking::load_candidate_catalog(in, !o->lenient, &warnings);
    }
    ExperimentConfig ec;
    ec.kind = parse_experiment_kind(o->experiment);
    ec.sizes = o->sizes;
    ec.default_size = o->size;
    ec.seed = o->seed;
    ec.threads = threads_from_env();
    ec.split = parse_split(o->split);
    ec.sqrt_intensity = config_sqrt(mlp_ck);
    auto report = run_experiment(d, catalog, {mlp.get(), gnn.get(), clf.get()}, ec);
    if (report.skipped_queries)
      warnings.push_back(std::to_string(report.skipped_queries) + " queries had no other candidate and were skipped");
    print_warnings(warnings);
    std::filesystem::create_directories(o->out_dir);
    const std::filesystem::path dir(o->out_dir);
    {
      auto out = open_out((dir / "summary.tsv").string());
      write_summary(out, report);
    }
    {
      auto out = open_out((dir / "curves.tsv").string());
      write_long_table(out, report);
    }
    {
      auto out = open_out((dir / "queries.tsv").string());
      write_query_ranks(out, report);
    }
    write_summary(std::cout, report, 5);
  });
}

void register_synth(CLI::App& app) {
  auto o = std::make_shared<SynthConfig>();
  auto out = std::make_shared<std::string>();
  auto* cmd = app.add_subcommand("synth", "Write a synthetic C/N/O library with rule-based spectra");
  cmd->add_option("--out", *out, "Output directory")->required();
  cmd->add_option("--formulas", o->formulas)->capture_default_str();
  cmd->add_option("--per-formula", o->per_formula, "Dataset molecules per formula")->capture_default_str();
  cmd->add_option("--decoys", o->decoys_per_formula, "Catalog-only isomers per formula")->capture_default_str();
  cmd->add_option("--spectra", o->spectra_per_molecule, "Spectra per molecule")->capture_default_str();
  cmd->add_option("--min-heavy", o->min_heavy)->capture_default_str();
  cmd->add_option("--max-heavy", o->max_heavy)->capture_default_str();
  cmd->add_option("--bins", o->bins, "Precursors must fall below this m/z")->capture_default_str();
  cmd->add_option("--seed", o->seed)->capture_default_str();
  cmd->callback([o, out] {
    auto data = generate_synthetic(*o);
    write_synthetic(*out, data);
    std::cout << "molecules\t" << data.molecules.size() << "\nspectra\t" << data.spectra.size() << "\ncatalog\t"
              << data.catalog.size() << "\n";
  });
}

}  // namespace esp::cli

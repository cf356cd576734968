#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <set>
#include <sstream>

#include "doctest.h"
#include "esp/chem/smiles.hpp"
#include "esp/common/error.hpp"
#include "esp/common/rng.hpp"
#include "esp/pipeline/checkpoint.hpp"
#include "esp/pipeline/config.hpp"
#include "esp/pipeline/dataset.hpp"
#include "esp/pipeline/experiments.hpp"
#include "esp/pipeline/synthetic.hpp"
#include "esp/pipeline/trainer.hpp"

using namespace esp;
using namespace esp::pipeline;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an esp::Error");
  return ErrorCode::InvalidArgument;
}

std::string bytes_of(const Checkpoint& c) {
  std::ostringstream out;
  write_checkpoint(out, c);
  return out.str();
}

Dataset synthetic_dataset(std::size_t formulas, std::size_t per_formula, std::uint64_t seed,
                          std::size_t decoys = 0, SynthData* keep = nullptr) {
  SynthConfig sc;
  sc.formulas = formulas;
  sc.per_formula = per_formula;
  sc.decoys_per_formula = decoys;
  sc.seed = seed;
  SynthData syn = generate_synthetic(sc);
  Dataset d = ingest(syn.spectra, syn.molecules, sc.bins);
  std::vector<std::string> ids;
  for (const auto& r : d.records) ids.push_back(r.id);
  apply_split(d, split_random(ids, seed));
  if (keep) *keep = std::move(syn);
  return d;
}

TrainConfig small_config(model::EncoderKind kind = model::EncoderKind::Mlp) {
  TrainConfig t;
  t.model.kind = kind;
  t.model.bins = 200;
  t.model.fp_bits = 256;
  t.model.hidden = 32;
  t.model.gnn_layers = 2;
  t.model.attention_rank = 8;
  t.model.attention_heads = 2;
  t.model.topics = 4;
  t.lda_iterations = 30;
  t.batch_size = 8;
  t.epochs = 10;
  t.seed = 3;
  return t;
}

// Brute-force average linkage: every step recomputes cluster distances as
// the mean over member pairs of the original matrix.
std::vector<std::set<std::size_t>> naive_upgma(const std::vector<double>& dist, std::size_t n, std::size_t k) {
  std::vector<std::set<std::size_t>> clusters;
  for (std::size_t i = 0; i < n; ++i) clusters.push_back({i});
  while (clusters.size() > k) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t ba = 0, bb = 0;
    for (std::size_t a = 0; a < clusters.size(); ++a)
      for (std::size_t b = a + 1; b < clusters.size(); ++b) {
        double s = 0;
        for (auto i : clusters[a])
          for (auto j : clusters[b]) s += dist[i * n + j];
        s /= static_cast<double>(clusters[a].size() * clusters[b].size());
        if (s < best) {
          best = s;
          ba = a;
          bb = b;
        }
      }
    clusters[ba].insert(clusters[bb].begin(), clusters[bb].end());
    clusters.erase(clusters.begin() + static_cast<long>(bb));
  }
  return clusters;
}

}  // namespace

TEST_CASE("config parsing and grid expansion") {
  auto c = Config::parse("# comment\nhidden = 64, 128\nlr = 1e-3,5e-4 , 1e-4\nmodel = mlp-pd  # trailing\n");
  CHECK(c.is_grid());
  CHECK(c.alternatives("lr").size() == 3);
  auto grid = expand_grid(c);
  CHECK(grid.size() == 6);
  std::set<std::string> seen;
  for (const auto& g : grid) {
    CHECK_FALSE(g.is_grid());
    seen.insert(g.to_string());
    CHECK(g.get("model", "") == "mlp-pd");
  }
  CHECK(seen.size() == 6);
  CHECK(grid[0].get_int("hidden", 0) == 64);
  CHECK(grid[0].get_double("lr", 0) == 1e-3);
  CHECK(code_of([] { Config::parse("novalue\n"); }) == ErrorCode::BadConfig);
  CHECK(code_of([&] { c.get("hidden", ""); }) == ErrorCode::BadConfig);
  CHECK(code_of([] { Config::parse("x = abc").get_int("x", 0); }) == ErrorCode::BadConfig);
  CHECK(code_of([] { train_config_from(Config::parse("nonsense = 1")); }) == ErrorCode::BadConfig);

  TrainConfig t = small_config();
  t.adam.lr = 5e-4;
  TrainConfig back = train_config_from(to_config(t));
  CHECK(to_config(back).to_string() == to_config(t).to_string());
  CHECK(back.adam.lr == 5e-4);
}

TEST_CASE("split_random proportions, disjointness, determinism") {
  std::vector<std::string> ids;
  for (int i = 0; i < 100; ++i) ids.push_back("m" + std::to_string(i));
  auto s = split_random(ids, 7);
  CHECK(s.size() == 100);
  std::map<Split, int> counts;
  for (const auto& [id, sp] : s) ++counts[sp];
  CHECK(counts[Split::Train] == 80);
  CHECK(counts[Split::Val] == 10);
  CHECK(counts[Split::Test] == 10);
  CHECK(split_random(ids, 7) == s);
  CHECK(split_random(ids, 8) != s);
  std::vector<std::string> shuffled = ids;
  Rng(1).shuffle(shuffled);
  CHECK(split_random(shuffled, 7) == s);
  ids.push_back("m0");
  CHECK(code_of([&] { split_random(ids, 1); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("sample_spectra keeps small groups and draws with replacement") {
  Dataset d;
  d.bins = 10;
  for (int m = 0; m < 2; ++m) {
    MoleculeRecord r;
    r.id = "x" + std::to_string(m);
    const int n = m == 0 ? 3 : 12;
    for (int s = 0; s < n; ++s) {
      NamedSpectrum ns{std::to_string(s), {}};
      ns.spectrum.intensities.assign(10, 0.0);
      ns.spectrum.intensities[0] = s;
      r.spectra.push_back(ns);
    }
    d.records.push_back(r);
  }
  std::vector<std::vector<std::size_t>> drawn, again;
  auto out = sample_spectra(d, 5, 11, &drawn);
  CHECK(out.records[0].spectra.size() == 3);
  CHECK(drawn[0] == std::vector<std::size_t>{0, 1, 2});
  CHECK(out.records[1].spectra.size() == 5);
  for (std::size_t k = 0; k < 5; ++k) {
    CHECK(drawn[1][k] < 12);
    CHECK(out.records[1].spectra[k].name == std::to_string(drawn[1][k]));
  }
  sample_spectra(d, 5, 11, &again);
  CHECK(again == drawn);
  // With replacement: across many seeds some draw repeats an index.
  bool repeat = false;
  for (std::uint64_t seed = 0; seed < 50 && !repeat; ++seed) {
    sample_spectra(d, 5, seed, &again);
    std::set<std::size_t> u(again[1].begin(), again[1].end());
    repeat = u.size() < 5;
  }
  CHECK(repeat);
}

TEST_CASE("upgma matches brute-force average linkage") {
  Rng rng(21);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 4 + rng.below(14);
    const std::size_t k = 1 + rng.below(n);
    std::vector<double> dist(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) dist[i * n + j] = dist[j * n + i] = rng.uniform();
    auto got = upgma(dist, n, k);
    auto want = naive_upgma(dist, n, k);
    REQUIRE(got.size() == k);
    std::set<std::set<std::size_t>> g, w(want.begin(), want.end());
    for (const auto& c : got) g.insert(std::set<std::size_t>(c.begin(), c.end()));
    CHECK(g == w);
    for (std::size_t c = 1; c < got.size(); ++c) CHECK(got[c - 1].size() >= got[c].size());
  }
  CHECK(code_of([] { upgma(std::vector<double>(4, 0.0), 2, 3); }) == ErrorCode::FewerMoleculesThanClusters);
}

TEST_CASE("split_realistic separates fingerprint blobs") {
  Rng rng(4);
  std::vector<std::string> ids;
  std::vector<chem::Fingerprint> fps;
  for (int i = 0; i < 30; ++i) {
    chem::Fingerprint fp(1024, 2);
    const std::size_t base = i < 15 ? 0 : 512;
    for (int b = 0; b < 40; ++b) fp.set(base + rng.below(60));
    fps.push_back(fp);
    ids.push_back("b" + std::to_string(i));
  }
  auto s = split_realistic(ids, fps, 2, 1, 9);
  REQUIRE(s.clusters.size() == 2);
  for (const auto& c : s.clusters) {
    const bool first_blob = c.front() < 15;
    for (std::size_t i : c) CHECK((i < 15) == first_blob);
    CHECK(c.size() == 15);
  }
  CHECK(s.split.size() == 30);
  int val = 0;
  for (const auto& [id, sp] : s.split) val += sp == Split::Val;
  CHECK(val == 15 / 9);

  // 50 clusters over a synthetic library; disjoint by construction of the map.
  SynthData syn;
  synthetic_dataset(6, 20, 5, 0, &syn);
  ids.clear();
  fps.clear();
  for (const auto& m : syn.molecules) {
    ids.push_back(m.id);
    fps.push_back(chem::circular_fingerprint(m.molecule));
  }
  auto r = split_realistic(ids, fps);
  CHECK(r.clusters.size() == 50);
  CHECK(r.split.size() == ids.size());
  std::set<std::size_t> members;
  for (const auto& c : r.clusters) members.insert(c.begin(), c.end());
  CHECK(members.size() == ids.size());
  std::size_t train_like = 0;
  for (std::size_t c = 0; c < 29; ++c) train_like += r.clusters[c].size();
  std::size_t tv = 0;
  for (const auto& [id, sp] : r.split) tv += sp != Split::Test;
  CHECK(tv == train_like);
  std::vector<std::string> few(ids.begin(), ids.begin() + 10);
  std::vector<chem::Fingerprint> few_fp(fps.begin(), fps.begin() + 10);
  CHECK(code_of([&] { split_realistic(few, few_fp); }) == ErrorCode::FewerMoleculesThanClusters);
}

TEST_CASE("ingest joins by name and skips unusable records") {
  std::istringstream mols("a\tCCO\nb\tCCN\n");
  auto entries = chem::read_molecule_table(mols);
  auto msp = spectra::parse_msp_text(
      "Name: a\nPrecursor_type: [M+H]+\nCollision_energy: 30\nNum Peaks: 2\n10.2 5\n20.7 10\n\n"
      "Name: a\nPrecursorMZ: 1500\nNum Peaks: 1\n10 1\n\n"
      "Name: zzz\nNum Peaks: 1\n10 1\n");
  std::vector<std::string> warnings;
  Dataset d = ingest(msp, entries, 1000, &warnings);
  REQUIRE(d.records.size() == 1);
  CHECK(d.records[0].id == "a");
  REQUIRE(d.records[0].spectra.size() == 1);
  const auto& s = d.records[0].spectra[0].spectrum;
  CHECK(s.intensities[10] == 5);
  CHECK(s.intensities[20] == 10);
  CHECK(s.precursor_mz == doctest::Approx(47.0491).epsilon(1e-5));
  CHECK(s.instrument.collision_energy() == doctest::Approx(0.3));
  CHECK(warnings.size() == 3);  // out-of-range, unmatched, molecule b without spectra

  std::stringstream ss;
  save_dataset(ss, d);
  Dataset back = load_dataset(ss);
  REQUIRE(back.records.size() == 1);
  CHECK(back.records[0].spectra[0].spectrum.intensities == s.intensities);
  CHECK(back.records[0].spectra[0].spectrum.instrument == s.instrument);
  CHECK(back.records[0].spectra[0].spectrum.precursor_mz == s.precursor_mz);
  std::istringstream bad("{\"format\": \"other\"}");
  CHECK(code_of([&] { load_dataset(bad); }) == ErrorCode::MalformedRecord);
}

TEST_CASE("synthetic generator groups isomers and is deterministic") {
  SynthConfig sc;
  sc.formulas = 4;
  sc.per_formula = 6;
  sc.decoys_per_formula = 3;
  sc.seed = 2;
  auto a = generate_synthetic(sc);
  auto b = generate_synthetic(sc);
  CHECK(a.molecules.size() == 24);
  CHECK(a.spectra.size() == 48);
  CHECK(a.catalog.size() == 36);
  CHECK(spectra::render_msp_text(a.spectra) == spectra::render_msp_text(b.spectra));
  std::map<std::string, std::set<std::string>> groups;
  for (const auto& row : a.catalog) {
    auto m = chem::parse_smiles(row.smiles);
    CHECK(chem::molecular_formula(m).to_string() == row.formula);
    for (const auto& atom : m.atoms()) CHECK((atom.element == "C" || atom.element == "N" || atom.element == "O"));
    groups[row.formula].insert(chem::canonical_signature(m));
  }
  CHECK(groups.size() == 4);
  for (const auto& [f, sigs] : groups) CHECK(sigs.size() == 9);
  for (const auto& rec : a.spectra) CHECK(*rec.precursor_mz < sc.bins);

  // Two fragments per bond plus the precursor.
  auto m = chem::parse_smiles("CCO");
  auto peaks = synthetic_peaks(m, 0.3);
  CHECK(peaks.size() == 5);
  CHECK(peaks[0].mz == doctest::Approx(47.0491).epsilon(1e-5));
}

TEST_CASE("checkpoint format round trip and errors") {
  Checkpoint c;
  c.seed = 99;
  c.config = "a = 1\n";
  c.meta = "{}";
  std::vector<double> v = {1.5, -2.25, 0.0, 3.0, 1e-3, 7};
  c.put("w", 2, 3, v);
  const std::string bytes = bytes_of(c);
  CHECK(bytes.substr(0, 7) == "ESPCKPT");
  std::istringstream in(bytes);
  Checkpoint back = read_checkpoint(in);
  CHECK(bytes_of(back) == bytes);
  CHECK(back.seed == 99);
  auto w = back.values("w", 2, 3);
  for (std::size_t i = 0; i < v.size(); ++i) CHECK(w[i] == static_cast<double>(static_cast<float>(v[i])));
  CHECK(code_of([&] { back.values("w", 3, 2); }) == ErrorCode::MalformedRecord);

  std::string corrupt = bytes;
  corrupt[0] = 'X';
  std::istringstream ci(corrupt);
  CHECK(code_of([&] { read_checkpoint(ci); }) == ErrorCode::BadMagic);

  std::string future = bytes;
  future[8] = 7;
  std::istringstream fi(future);
  try {
    read_checkpoint(fi);
    FAIL("expected VersionMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::VersionMismatch);
    const std::string msg = e.what();
    CHECK(msg.find("7") != std::string::npos);
    CHECK(msg.find(std::to_string(kCheckpointVersion)) != std::string::npos);
  }
  std::istringstream ti(bytes.substr(0, bytes.size() - 3));
  CHECK(code_of([&] { read_checkpoint(ti); }) == ErrorCode::MalformedRecord);
}

TEST_CASE("training overfits a 20-molecule set") {
  Dataset d = synthetic_dataset(2, 10, 13);
  for (auto& r : d.records) r.split = Split::Train;
  TrainConfig t = small_config();
  t.epochs = 200;
  t.model.hidden = 64;
  Trainer tr(d, t);
  tr.run();
  const auto& h = tr.history();
  REQUIRE(h.train_spectral.size() == 200);
  CHECK(h.train_spectral.back() <= 0.5 * h.train_spectral.front());
  CHECK(std::isnan(h.val_average_rank.front()));
  CHECK(h.best_epoch >= 1);
}

TEST_CASE("fixed seed gives a bit-identical checkpoint and resume matches") {
  Dataset d = synthetic_dataset(3, 8, 17);
  for (auto kind : {model::EncoderKind::Mlp, model::EncoderKind::Gnn}) {
    TrainConfig t = small_config(kind);
    t.epochs = 6;
    t.model.dropout = 0.3;
    Trainer a(d, t);
    a.run();
    Trainer b(d, t);
    b.run();
    const std::string full = bytes_of(a.checkpoint());
    CHECK(bytes_of(b.checkpoint()) == full);

    Trainer c(d, t);
    c.run(3);
    std::istringstream in(bytes_of(c.checkpoint()));
    auto resumed = Trainer::resume(d, read_checkpoint(in));
    CHECK(resumed->epoch() == 3);
    resumed->run();
    CHECK(bytes_of(resumed->checkpoint()) == full);
  }
}

TEST_CASE("loaded model reproduces predictions bit-exactly") {
  Dataset d = synthetic_dataset(3, 8, 19);
  TrainConfig t = small_config(model::EncoderKind::Gnn);
  t.epochs = 3;
  Trainer tr(d, t);
  tr.run();
  std::istringstream in(bytes_of(tr.checkpoint()));
  auto loaded = load_model(read_checkpoint(in), false);
  for (std::size_t i = 0; i < 10; ++i) {
    const auto& r = d.records[i];
    const auto& spec = r.spectra[0].spectrum;
    auto fp = model_fingerprint(t.model, r.molecule);
    CHECK(predict_for(*loaded, r.molecule, &fp, spec) == predict_for(tr.model(), r.molecule, &fp, spec));
  }
}

TEST_CASE("non-finite loss aborts with DivergedLoss") {
  Dataset d = synthetic_dataset(2, 6, 23);
  for (auto& r : d.records) r.split = Split::Train;
  d.records[0].spectra[0].spectrum.intensities[5] = std::numeric_limits<double>::infinity();
  TrainConfig t = small_config();
  t.model.aux = false;
  Trainer tr(d, t);
  CHECK(code_of([&] { tr.run(); }) == ErrorCode::DivergedLoss);
}

TEST_CASE("experiment reports are consistent and nested sizes are monotone") {
  SynthData syn;
  Dataset d = synthetic_dataset(3, 10, 29, 40, &syn);
  TrainConfig t = small_config();
  t.epochs = 5;
  Trainer mlp(d, t);
  mlp.run();
  TrainConfig tg = small_config(model::EncoderKind::Gnn);
  tg.epochs = 5;
  Trainer gnn(d, tg);
  gnn.run();

  const auto catalog = to_catalog(syn.catalog);
  ExperimentConfig ec;
  ec.kind = ExperimentKind::CandSize;
  ec.sizes = {5, 10, 25, 50};
  ec.seed = 4;
  ec.split = Split::Train;
  auto report = run_experiment(d, catalog, {&mlp.model(), &gnn.model(), nullptr}, ec);
  CHECK(report.models.size() == 2);
  std::size_t train_spectra = 0;
  for (std::size_t i : d.indices(Split::Train)) train_spectra += d.records[i].spectra.size();
  CHECK(report.ranks.size() == train_spectra * 4 * 2);

  std::ostringstream lt, sm;
  write_long_table(lt, report);
  write_summary(sm, report);
  std::istringstream lin(lt.str());
  std::string line;
  std::getline(lin, line);
  std::map<std::pair<std::string, std::string>, std::vector<double>> curves;
  std::size_t rows = 0;
  while (std::getline(lin, line)) {
    auto f = chem::split_tabs(line);
    curves[{f[1], f[2]}].push_back(std::stod(f[4]));
    ++rows;
  }
  CHECK(rows == 2 * 4 * 20);
  for (const auto& [key, curve] : curves)
    for (std::size_t k = 1; k < curve.size(); ++k) CHECK(curve[k] >= curve[k - 1]);
  for (const char* m : {"MLP-PD", "GNN-PD"})
    for (std::size_t k = 0; k < 20; ++k) CHECK(curves[{"size=5", m}][k] >= curves[{"size=50", m}][k]);

  // Per-query ranks must never improve as the nested set grows.
  std::map<std::pair<std::string, std::string>, std::vector<double>> by_query;
  for (const auto& q : report.ranks) by_query[{q.query_id, q.model}].push_back(q.rank);
  for (const auto& [key, ranks] : by_query)
    for (std::size_t i = 1; i < ranks.size(); ++i) CHECK(ranks[i] >= ranks[i - 1]);

  // Summary average equals the mean of the per-query column.
  std::istringstream sin(sm.str());
  std::getline(sin, line);
  while (std::getline(sin, line)) {
    auto f = chem::split_tabs(line);
    double sum = 0;
    std::size_t n = 0;
    for (const auto& q : report.ranks)
      if (q.condition == f[1] && q.model == f[2]) {
        sum += q.rank;
        ++n;
      }
    CHECK(std::stoul(f[3]) == n);
    CHECK(std::abs(std::stod(f[4]) - sum / static_cast<double>(n)) < 1e-9);
  }

  ec.threads = 3;
  auto threaded = run_experiment(d, catalog, {&mlp.model(), &gnn.model(), nullptr}, ec);
  std::ostringstream a, b;
  write_query_ranks(a, report);
  write_query_ranks(b, threaded);
  CHECK(a.str() == b.str());
}

TEST_CASE("ensemble stage end to end in every label mode") {
  Dataset d = synthetic_dataset(3, 10, 31);
  TrainConfig t = small_config();
  t.epochs = 4;
  Trainer mlp(d, t);
  mlp.run();
  TrainConfig tg = small_config(model::EncoderKind::Gnn);
  tg.epochs = 4;
  Trainer gnn(d, tg);
  gnn.run();
  auto data = build_ensemble_data(d, mlp.model(), gnn.model());
  REQUIRE(!data.examples.empty());
  for (const auto& ex : data.examples) {
    CHECK(ex.rank_mlp >= 1.0);
    CHECK(ex.loss_mlp <= 0.0);
  }
  auto cfg = classifier_config_from(Config::parse("bins = 200\nens_hidden = 16\nens_epochs = 5\nseed = 2"));
  CHECK(cfg.hidden == 16);
  for (auto [source, weighting] : {std::pair{ensemble::LabelSource::Rank, ensemble::Weighting::Smape},
                                   std::pair{ensemble::LabelSource::Loss, ensemble::Weighting::Smape},
                                   std::pair{ensemble::LabelSource::Rank, ensemble::Weighting::Uniform}}) {
    auto examples = data.examples;
    ensemble::assign_labels(examples, source, weighting);
    ensemble::EnsembleTrainingLog log;
    auto clf = ensemble::train_ensemble(examples, data.validation, cfg, &log);
    auto ck = ensemble_checkpoint(clf, source, weighting, log);
    std::istringstream in(bytes_of(ck));
    auto loaded = load_ensemble(read_checkpoint(in));
    for (const auto& ex : data.examples) CHECK(loaded->predict(ex.query) == clf.predict(ex.query));
  }
}

#include "esp/pipeline/trainer.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>

#include "esp/common/error.hpp"
#include "esp/common/rng.hpp"
#include "esp/model/heads.hpp"
#include "esp/ranking/ranking.hpp"
#include "json.hpp"

namespace esp::pipeline {

using nlohmann::json;

namespace {

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "model",   "bins",         "fp_bits",      "fp_radius",      "hidden",         "gnn_layers",
      "bidirectional", "attention", "attention_heads", "attention_rank", "theta", "aux",
      "topics",  "lambda",       "dropout",      "epochs",         "batch_size",     "lr",
      "weight_decay", "seed",    "patience",     "sqrt_intensity", "lda_quantization", "lda_iterations"};
  return keys;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json nan_safe(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(std::isfinite(x) ? json(x) : json(nullptr));
  return a;
}

std::vector<double> from_nan_safe(const json& a) {
  std::vector<double> v;
  for (const auto& x : a) v.push_back(x.is_null() ? std::numeric_limits<double>::quiet_NaN() : x.get<double>());
  return v;
}

double json_double(const json& x) {
  return x.is_null() ? std::numeric_limits<double>::quiet_NaN() : x.get<double>();
}

json json_double_out(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

/// a is better than b when it has a finite, lower rank; equal (or both
/// missing) ranks fall back to the lower training loss.
bool better(double rank_a, double loss_a, double rank_b, double loss_b) {
  const bool fa = std::isfinite(rank_a), fb = std::isfinite(rank_b);
  if (fa && !fb) return true;
  if (!fa && fb) return false;
  if (fa && rank_a != rank_b) return rank_a < rank_b;
  return loss_a < loss_b;
}

}  // namespace

TrainConfig train_config_from(const Config& c) {
  for (const auto& [k, v] : c.values())
    if (!known_keys().count(k)) throw Error(ErrorCode::BadConfig, "unknown key '" + k + "'");
  TrainConfig t;
  auto& m = t.model;
  m.kind = model::parse_encoder_kind(c.get("model", model::to_string(m.kind)));
  m.bins = static_cast<std::size_t>(c.get_int("bins", static_cast<long long>(m.bins)));
  m.fp_bits = static_cast<std::size_t>(c.get_int("fp_bits", static_cast<long long>(m.fp_bits)));
  m.fp_radius = static_cast<int>(c.get_int("fp_radius", m.fp_radius));
  m.hidden = static_cast<std::size_t>(c.get_int("hidden", static_cast<long long>(m.hidden)));
  m.gnn_layers = static_cast<std::size_t>(c.get_int("gnn_layers", static_cast<long long>(m.gnn_layers)));
  m.bidirectional = c.get_bool("bidirectional", m.bidirectional);
  m.attention = c.get_bool("attention", m.attention);
  m.attention_heads = static_cast<std::size_t>(c.get_int("attention_heads", static_cast<long long>(m.attention_heads)));
  m.attention_rank = static_cast<std::size_t>(c.get_int("attention_rank", static_cast<long long>(m.attention_rank)));
  m.theta = c.get_double("theta", m.theta);
  m.aux = c.get_bool("aux", m.aux);
  m.topics = static_cast<std::size_t>(c.get_int("topics", static_cast<long long>(m.topics)));
  m.lambda = c.get_double("lambda", m.lambda);
  m.dropout = c.get_double("dropout", m.dropout);
  t.epochs = static_cast<std::size_t>(c.get_int("epochs", static_cast<long long>(t.epochs)));
  t.batch_size = static_cast<std::size_t>(c.get_int("batch_size", static_cast<long long>(t.batch_size)));
  t.adam.lr = c.get_double("lr", t.adam.lr);
  t.adam.weight_decay = c.get_double("weight_decay", t.adam.weight_decay);
  t.seed = static_cast<std::uint64_t>(c.get_int("seed", static_cast<long long>(t.seed)));
  t.patience = static_cast<std::size_t>(c.get_int("patience", static_cast<long long>(t.patience)));
  t.sqrt_intensity = c.get_bool("sqrt_intensity", t.sqrt_intensity);
  t.lda_quantization = static_cast<int>(c.get_int("lda_quantization", t.lda_quantization));
  t.lda_iterations = static_cast<std::size_t>(c.get_int("lda_iterations", static_cast<long long>(t.lda_iterations)));
  if (t.batch_size == 0) throw Error(ErrorCode::BadConfig, "batch_size must be positive");
  if (m.dropout < 0 || m.dropout >= 1) throw Error(ErrorCode::BadConfig, "dropout must be in [0, 1)");
  if (t.adam.lr <= 0) throw Error(ErrorCode::BadConfig, "lr must be positive");
  if (t.lda_quantization < 1) throw Error(ErrorCode::BadConfig, "lda_quantization must be positive");
  return t;
}

Config to_config(const TrainConfig& t) {
  Config c;
  const auto& m = t.model;
  auto b = [](bool v) { return std::string(v ? "true" : "false"); };
  c.set("model", model::to_string(m.kind));
  c.set("bins", std::to_string(m.bins));
  c.set("fp_bits", std::to_string(m.fp_bits));
  c.set("fp_radius", std::to_string(m.fp_radius));
  c.set("hidden", std::to_string(m.hidden));
  c.set("gnn_layers", std::to_string(m.gnn_layers));
  c.set("bidirectional", b(m.bidirectional));
  c.set("attention", b(m.attention));
  c.set("attention_heads", std::to_string(m.attention_heads));
  c.set("attention_rank", std::to_string(m.attention_rank));
  c.set("theta", fmt(m.theta));
  c.set("aux", b(m.aux));
  c.set("topics", std::to_string(m.topics));
  c.set("lambda", fmt(m.lambda));
  c.set("dropout", fmt(m.dropout));
  c.set("epochs", std::to_string(t.epochs));
  c.set("batch_size", std::to_string(t.batch_size));
  c.set("lr", fmt(t.adam.lr));
  c.set("weight_decay", fmt(t.adam.weight_decay));
  c.set("seed", std::to_string(t.seed));
  c.set("patience", std::to_string(t.patience));
  c.set("sqrt_intensity", b(t.sqrt_intensity));
  c.set("lda_quantization", std::to_string(t.lda_quantization));
  c.set("lda_iterations", std::to_string(t.lda_iterations));
  return c;
}

std::vector<ValidationQuery> stratified_queries(const Dataset& d, Split split, const std::vector<Split>& pool_splits) {
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < d.records.size(); ++i) {
    const bool in_pool = pool_splits.empty() ||
                         std::find(pool_splits.begin(), pool_splits.end(), d.records[i].split) != pool_splits.end();
    if (in_pool) groups[d.records[i].formula.to_string()].push_back(i);
  }
  std::vector<ValidationQuery> out;
  for (std::size_t i = 0; i < d.records.size(); ++i) {
    const auto& r = d.records[i];
    if (r.split != split) continue;
    auto it = groups.find(r.formula.to_string());
    if (it == groups.end() || it->second.size() < 2) continue;
    const auto pos = std::find(it->second.begin(), it->second.end(), i);
    if (pos == it->second.end()) continue;
    for (std::size_t s = 0; s < r.spectra.size(); ++s)
      out.push_back({i, s, it->second, static_cast<std::size_t>(pos - it->second.begin())});
  }
  return out;
}

std::vector<double> target_vector(const spectra::BinnedSpectrum& s, bool sqrt_intensity) {
  return spectra::l2_normalize(sqrt_intensity ? spectra::sqrt_intensities(s) : s).intensities;
}

chem::Fingerprint model_fingerprint(const model::ModelConfig& c, const chem::Molecule& m) {
  return chem::circular_fingerprint(m, c.fp_radius, c.fp_bits);
}

std::vector<double> predict_for(const model::SpectrumModel& m, const chem::Molecule& mol, const chem::Fingerprint* fp,
                                const spectra::BinnedSpectrum& query) {
  model::ModelInput in{&mol, fp, query.instrument, query.precursor_mz};
  return m.predict(in);
}

Trainer::Trainer(const Dataset& data, const TrainConfig& config) : Trainer(data, config, nullptr) {}

Trainer::Trainer(const Dataset& data, const TrainConfig& config, const Checkpoint* ckpt)
    : data_(data), config_(config) {
  prepare(ckpt);
}

void Trainer::prepare(const Checkpoint* ckpt) {
  if (data_.bins != config_.model.bins)
    throw Error(ErrorCode::BadConfig, "dataset has " + std::to_string(data_.bins) + " bins but the model expects " +
                                          std::to_string(config_.model.bins));
  fingerprints_.clear();
  for (const auto& r : data_.records) fingerprints_.push_back(model_fingerprint(config_.model, r.molecule));

  std::vector<const chem::Molecule*> mols;
  for (const auto& r : data_.records) mols.push_back(&r.molecule);
  model::AtomFeaturizer featurizer = model::AtomFeaturizer::from_molecules(mols, config_.model.atom_aromatic,
                                                                           config_.model.atom_charge);
  json meta;
  if (ckpt) {
    meta = json::parse(ckpt->meta);
    featurizer = model::AtomFeaturizer(meta.at("elements").get<std::vector<std::string>>(),
                                       meta.at("atom_aromatic").get<bool>(), meta.at("atom_charge").get<bool>());
  }
  model_ = std::make_unique<model::SpectrumModel>(config_.model, featurizer, config_.seed);

  const auto train_idx = data_.indices(Split::Train);
  if (train_idx.empty()) throw Error(ErrorCode::InvalidArgument, "dataset has no training molecules");

  if (config_.model.aux) {
    if (ckpt) {
      const auto& l = meta.at("lda");
      const auto t = l.at("topics").get<std::size_t>(), v = l.at("vocabulary").get<std::size_t>();
      topics_ = topics::TopicModel(t, v, ckpt->values("lda/phi", t, v), l.at("alpha").get<double>(),
                                   l.at("beta").get<double>(), l.at("fold_in_iterations").get<std::size_t>(),
                                   l.at("fold_in_burn_in").get<std::size_t>(), l.at("seed").get<std::uint64_t>());
    } else {
      std::vector<spectra::PeakDocument> docs;
      for (std::size_t i : train_idx)
        for (const auto& s : data_.records[i].spectra)
          docs.push_back(spectra::to_peak_document(s.spectrum, config_.lda_quantization));
      topics::LdaConfig lc;
      lc.topics = config_.model.topics;
      lc.iterations = config_.lda_iterations;
      lc.seed = Rng::derive(config_.seed, 0x1da);
      auto fitted = topics::fit_lda(docs, config_.model.bins, lc);
      // Topics are persisted as float32; snapping here keeps a resumed run on
      // the same topic targets.
      std::vector<double> phi = fitted.phi();
      for (double& p : phi) p = nn::snap_float(p);
      topics_ = topics::TopicModel(fitted.topics(), fitted.vocabulary(), std::move(phi), fitted.alpha(),
                                   fitted.beta(), fitted.fold_in_iterations(), fitted.fold_in_burn_in(),
                                   fitted.seed());
    }
  }

  examples_.clear();
  for (std::size_t i : train_idx) {
    const auto& r = data_.records[i];
    for (std::size_t s = 0; s < r.spectra.size(); ++s) {
      const auto& spec = r.spectra[s].spectrum;
      TrainExample ex;
      ex.record = i;
      ex.spectrum = s;
      ex.input = {&r.molecule, &fingerprints_[i], spec.instrument, spec.precursor_mz};
      ex.target = target_vector(spec, config_.sqrt_intensity);
      if (topics_)
        ex.topic_target = topics_->transform(spectra::to_peak_document(spec, config_.lda_quantization),
                                             Rng::derive(config_.seed, 0x70c | (examples_.size() << 12)));
      examples_.push_back(std::move(ex));
    }
  }
  validation_ = stratified_queries(data_, Split::Val);

  auto& ps = model_->params();
  adam_ = nn::make_adam_state(ps, config_.adam);
  best_.assign(ps.count(), {});
  for (std::size_t p = 0; p < ps.count(); ++p) best_[p] = ps.at(p).value;
  history_ = {};
  history_.best_val_rank = std::numeric_limits<double>::quiet_NaN();
  history_.best_train_loss = std::numeric_limits<double>::infinity();
  epoch_ = 0;
  since_best_ = 0;
  stopped_ = false;

  if (!ckpt) return;
  if (meta.at("examples").get<std::size_t>() != examples_.size())
    throw Error(ErrorCode::InvalidArgument, "checkpoint was trained on a different dataset");
  for (std::size_t p = 0; p < ps.count(); ++p) {
    auto& param = ps.at(p);
    param.value = ckpt->values("param/" + param.name(), param.rows(), param.cols());
    adam_.m[p] = ckpt->values("adam.m/" + param.name(), param.rows(), param.cols());
    adam_.v[p] = ckpt->values("adam.v/" + param.name(), param.rows(), param.cols());
    best_[p] = ckpt->values("best/" + param.name(), param.rows(), param.cols());
  }
  adam_.step = meta.at("adam_step").get<std::uint64_t>();
  epoch_ = meta.at("epoch").get<std::size_t>();
  since_best_ = meta.at("since_best").get<std::size_t>();
  stopped_ = meta.at("stopped").get<bool>();
  const auto& h = meta.at("history");
  history_.train_loss = from_nan_safe(h.at("train_loss"));
  history_.train_spectral = from_nan_safe(h.at("train_spectral"));
  history_.val_average_rank = from_nan_safe(h.at("val_average_rank"));
  history_.best_epoch = h.at("best_epoch").get<std::size_t>();
  history_.best_val_rank = json_double(h.at("best_val_rank"));
  history_.best_train_loss = h.at("best_train_loss").is_null() ? std::numeric_limits<double>::infinity()
                                                               : h.at("best_train_loss").get<double>();
}

std::unique_ptr<Trainer> Trainer::resume(const Dataset& data, const Checkpoint& ckpt) {
  const json meta = json::parse(ckpt.meta);
  if (meta.value("role", "") != "spectrum-model")
    throw Error(ErrorCode::InvalidArgument, "checkpoint does not hold a spectrum model");
  const TrainConfig config = train_config_from(Config::parse(ckpt.config));
  return std::unique_ptr<Trainer>(new Trainer(data, config, &ckpt));
}

double Trainer::train_epoch() {
  auto& ps = model_->params();
  Rng rng(Rng::derive(config_.seed, epoch_));
  std::vector<std::size_t> order(examples_.size());
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);

  double total = 0.0, spectral = 0.0;
  for (std::size_t start = 0; start < order.size(); start += config_.batch_size) {
    const std::size_t end = std::min(order.size(), start + config_.batch_size);
    ps.zero_grad();
    for (std::size_t k = start; k < end; ++k) {
      const TrainExample& ex = examples_[order[k]];
      nn::Tape tape(true);
      auto out = model_->forward(tape, ex.input, &rng);
      nn::Var y = tape.row(ex.target);
      nn::Var loss = model::spectral_loss(tape, out.spectrum, y);
      const double s = tape.scalar(loss);
      if (out.topics.valid() && config_.model.lambda != 0.0)
        loss = tape.add(loss, tape.scale(model::aux_loss(tape, out.topics, ex.topic_target), config_.model.lambda));
      const double l = tape.scalar(loss);
      if (!std::isfinite(l))
        throw Error(ErrorCode::DivergedLoss, "non-finite loss at epoch " + std::to_string(epoch_ + 1) + " on " +
                                                 data_.records[ex.record].id + " spectrum " +
                                                 std::to_string(ex.spectrum) + " (lr " + fmt(config_.adam.lr) + ")");
      tape.backward(loss);
      total += l;
      spectral += 1.0 + s;
    }
    ps.scale_grad(1.0 / static_cast<double>(end - start));
    nn::adam_step(ps, adam_);
  }
  const double n = static_cast<double>(examples_.size());
  history_.train_spectral.push_back(spectral / n);
  return total / n;
}

void Trainer::run(std::size_t epochs, const std::function<void(const Trainer&)>& on_epoch) {
  if (epochs == 0) epochs = config_.epochs;
  auto& ps = model_->params();
  while (epoch_ < epochs && !stopped_) {
    const double loss = train_epoch();
    ++epoch_;
    history_.train_loss.push_back(loss);
    const double val = validation_rank();
    history_.val_average_rank.push_back(val);
    if (history_.best_epoch == 0 || better(val, loss, history_.best_val_rank, history_.best_train_loss)) {
      history_.best_epoch = epoch_;
      history_.best_val_rank = val;
      history_.best_train_loss = loss;
      for (std::size_t p = 0; p < ps.count(); ++p) best_[p] = ps.at(p).value;
      since_best_ = 0;
    } else {
      ++since_best_;
    }
    if (config_.patience && since_best_ >= config_.patience) stopped_ = true;
    if (on_epoch) on_epoch(*this);
  }
}

double Trainer::evaluate_spectral_loss() const {
  double sum = 0.0;
  for (const auto& ex : examples_) sum += 1.0 + model::spectral_loss(model_->predict(ex.input), ex.target);
  return examples_.empty() ? 0.0 : sum / static_cast<double>(examples_.size());
}

double Trainer::validation_rank() const {
  if (validation_.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::map<std::string, std::vector<double>> cache;
  std::vector<double> ranks;
  for (const auto& q : validation_) {
    const auto& spec = data_.records[q.record].spectra[q.spectrum].spectrum;
    const std::string tag = spec.instrument.key() + "|" + std::to_string(std::lround(spec.precursor_mz)) + "|";
    std::vector<std::vector<double>> predicted;
    for (std::size_t c : q.candidates) {
      auto [it, fresh] = cache.try_emplace(tag + std::to_string(c));
      if (fresh) it->second = predict_for(*model_, data_.records[c].molecule, &fingerprints_[c], spec);
      predicted.push_back(it->second);
    }
    ranks.push_back(ranking::rank_candidates(target_vector(spec, config_.sqrt_intensity), predicted, q.target).rank);
  }
  return ranking::average_rank(ranks);
}

Checkpoint Trainer::checkpoint() const {
  Checkpoint c;
  c.seed = config_.seed;
  c.config = to_config(config_).to_string();
  json meta;
  meta["role"] = "spectrum-model";
  meta["kind"] = model::to_string(config_.model.kind);
  meta["elements"] = model_->featurizer().elements();
  meta["atom_aromatic"] = model_->featurizer().use_aromatic();
  meta["atom_charge"] = model_->featurizer().use_charge();
  meta["epoch"] = epoch_;
  meta["adam_step"] = adam_.step;
  meta["since_best"] = since_best_;
  meta["stopped"] = stopped_;
  meta["examples"] = examples_.size();
  meta["history"] = {{"train_loss", nan_safe(history_.train_loss)},
                     {"train_spectral", nan_safe(history_.train_spectral)},
                     {"val_average_rank", nan_safe(history_.val_average_rank)},
                     {"best_epoch", history_.best_epoch},
                     {"best_val_rank", json_double_out(history_.best_val_rank)},
                     {"best_train_loss", json_double_out(history_.best_train_loss)}};
  if (topics_)
    meta["lda"] = {{"topics", topics_->topics()},
                   {"vocabulary", topics_->vocabulary()},
                   {"alpha", topics_->alpha()},
                   {"beta", topics_->beta()},
                   {"fold_in_iterations", topics_->fold_in_iterations()},
                   {"fold_in_burn_in", topics_->fold_in_burn_in()},
                   {"seed", topics_->seed()},
                   {"quantization", config_.lda_quantization}};
  c.meta = meta.dump();

  const auto& ps = model_->params();
  for (std::size_t p = 0; p < ps.count(); ++p) {
    const auto& param = ps.at(p);
    c.put("param/" + param.name(), param.rows(), param.cols(), param.value);
  }
  for (std::size_t p = 0; p < ps.count(); ++p) {
    const auto& param = ps.at(p);
    c.put("adam.m/" + param.name(), param.rows(), param.cols(), adam_.m[p]);
    c.put("adam.v/" + param.name(), param.rows(), param.cols(), adam_.v[p]);
  }
  for (std::size_t p = 0; p < ps.count(); ++p) {
    const auto& param = ps.at(p);
    c.put("best/" + param.name(), param.rows(), param.cols(), best_[p]);
  }
  if (topics_) c.put("lda/phi", topics_->topics(), topics_->vocabulary(), topics_->phi());
  return c;
}

std::unique_ptr<model::SpectrumModel> load_model(const Checkpoint& ckpt, bool best) {
  const json meta = json::parse(ckpt.meta);
  if (meta.value("role", "") != "spectrum-model")
    throw Error(ErrorCode::InvalidArgument, "checkpoint does not hold a spectrum model");
  const TrainConfig config = train_config_from(Config::parse(ckpt.config));
  model::AtomFeaturizer featurizer(meta.at("elements").get<std::vector<std::string>>(),
                                   meta.at("atom_aromatic").get<bool>(), meta.at("atom_charge").get<bool>());
  auto m = std::make_unique<model::SpectrumModel>(config.model, featurizer, config.seed);
  auto& ps = m->params();
  for (std::size_t p = 0; p < ps.count(); ++p) {
    auto& param = ps.at(p);
    param.value = ckpt.values((best ? "best/" : "param/") + param.name(), param.rows(), param.cols());
  }
  return m;
}

}  // namespace esp::pipeline

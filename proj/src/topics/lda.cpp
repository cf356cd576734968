#include "esp/topics/lda.hpp"

#include <cmath>

#include "esp/common/error.hpp"
#include "esp/common/rng.hpp"

namespace esp::topics {

namespace {

std::size_t sample(const std::vector<double>& weights, double total, Rng& rng) {
  double u = rng.uniform() * total;
  for (std::size_t t = 0; t < weights.size(); ++t) {
    u -= weights[t];
    if (u < 0.0) return t;
  }
  return weights.size() - 1;
}

std::vector<std::size_t> tokens_of(const spectra::PeakDocument& doc, std::size_t vocabulary) {
  std::vector<std::size_t> w;
  for (const auto& [word, count] : doc.counts) {
    if (word >= vocabulary)
      throw Error(ErrorCode::InvalidArgument,
                  "word " + std::to_string(word) + " outside vocabulary of " + std::to_string(vocabulary));
    if (count < 0) throw Error(ErrorCode::InvalidArgument, "negative word count");
    w.insert(w.end(), static_cast<std::size_t>(count), word);
  }
  return w;
}

}  // namespace

TopicModel::TopicModel(std::size_t topics, std::size_t vocabulary, std::vector<double> phi, double alpha,
                       double beta, std::size_t fold_in_iterations, std::size_t fold_in_burn_in,
                       std::uint64_t seed)
    : topics_(topics), vocabulary_(vocabulary), phi_(std::move(phi)), alpha_(alpha), beta_(beta),
      fold_in_iterations_(fold_in_iterations), fold_in_burn_in_(fold_in_burn_in), seed_(seed) {
  if (phi_.size() != topics * vocabulary) throw Error(ErrorCode::DimensionMismatch, "phi has the wrong size");
  if (fold_in_burn_in_ >= fold_in_iterations_)
    throw Error(ErrorCode::InvalidArgument, "fold-in burn-in must be shorter than the fold-in run");
}

std::vector<double> TopicModel::transform(const spectra::PeakDocument& doc) const { return transform(doc, seed_); }

std::vector<double> TopicModel::transform(const spectra::PeakDocument& doc, std::uint64_t seed) const {
  const std::size_t T = topics_;
  std::vector<double> theta(T, 1.0 / static_cast<double>(T));
  const auto words = tokens_of(doc, vocabulary_);
  if (words.empty()) return theta;

  Rng rng(seed);
  std::vector<std::size_t> z(words.size());
  std::vector<double> ndt(T, 0.0);
  for (auto& zi : z) {
    zi = static_cast<std::size_t>(rng.below(T));
    ndt[zi] += 1.0;
  }
  std::vector<double> acc(T, 0.0), weights(T);
  const double denom = static_cast<double>(words.size()) + static_cast<double>(T) * alpha_;
  for (std::size_t sweep = 0; sweep < fold_in_iterations_; ++sweep) {
    for (std::size_t i = 0; i < words.size(); ++i) {
      ndt[z[i]] -= 1.0;
      double total = 0.0;
      for (std::size_t t = 0; t < T; ++t) total += (weights[t] = phi(t, words[i]) * (ndt[t] + alpha_));
      z[i] = sample(weights, total, rng);
      ndt[z[i]] += 1.0;
    }
    if (sweep >= fold_in_burn_in_)
      for (std::size_t t = 0; t < T; ++t) acc[t] += (ndt[t] + alpha_) / denom;
  }
  double sum = 0.0;
  for (double a : acc) sum += a;
  for (std::size_t t = 0; t < T; ++t) theta[t] = acc[t] / sum;
  return theta;
}

TopicModel fit_lda(const std::vector<spectra::PeakDocument>& docs, std::size_t vocabulary, const LdaConfig& config) {
  const std::size_t T = config.topics;
  if (T < 2) throw Error(ErrorCode::InvalidArgument, "LDA needs at least two topics");
  if (vocabulary == 0) throw Error(ErrorCode::EmptyVocabulary, "vocabulary size is zero");
  const double alpha = config.alpha > 0 ? config.alpha : 1.0 / static_cast<double>(T);
  const double beta = config.beta > 0 ? config.beta : 1.0 / static_cast<double>(T);

  std::vector<std::vector<std::size_t>> words;
  std::size_t tokens = 0;
  for (const auto& d : docs) {
    auto w = tokens_of(d, vocabulary);
    if (w.empty()) continue;
    tokens += w.size();
    words.push_back(std::move(w));
  }
  if (tokens == 0) throw Error(ErrorCode::EmptyVocabulary, "no words in any document");
  if (words.size() < T)
    throw Error(ErrorCode::TooFewDocuments, std::to_string(words.size()) + " non-empty documents for " +
                                                std::to_string(T) + " topics");

  const std::size_t V = vocabulary;
  Rng rng(config.seed);
  std::vector<std::vector<std::size_t>> z(words.size());
  std::vector<double> ndt(words.size() * T, 0.0), ntw(T * V, 0.0), nt(T, 0.0);
  for (std::size_t d = 0; d < words.size(); ++d) {
    z[d].resize(words[d].size());
    for (std::size_t i = 0; i < words[d].size(); ++i) {
      const auto t = static_cast<std::size_t>(rng.below(T));
      z[d][i] = t;
      ndt[d * T + t] += 1;
      ntw[t * V + words[d][i]] += 1;
      nt[t] += 1;
    }
  }

  const double vbeta = static_cast<double>(V) * beta;
  auto log_likelihood = [&] {
    double ll = static_cast<double>(T) * (std::lgamma(vbeta) - static_cast<double>(V) * std::lgamma(beta));
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t w = 0; w < V; ++w) {
        const double n = ntw[t * V + w];
        if (n > 0) ll += std::lgamma(n + beta) - std::lgamma(beta);
      }
      ll += static_cast<double>(V) * std::lgamma(beta) - std::lgamma(nt[t] + vbeta);
    }
    return ll;
  };

  std::vector<double> weights(T);
  std::vector<double> history;
  history.reserve(config.iterations);
  for (std::size_t sweep = 0; sweep < config.iterations; ++sweep) {
    for (std::size_t d = 0; d < words.size(); ++d) {
      double* nd = ndt.data() + d * T;
      for (std::size_t i = 0; i < words[d].size(); ++i) {
        const std::size_t w = words[d][i];
        std::size_t t = z[d][i];
        nd[t] -= 1;
        ntw[t * V + w] -= 1;
        nt[t] -= 1;
        double total = 0.0;
        for (std::size_t k = 0; k < T; ++k)
          total += (weights[k] = (nd[k] + alpha) * (ntw[k * V + w] + beta) / (nt[k] + vbeta));
        t = sample(weights, total, rng);
        z[d][i] = t;
        nd[t] += 1;
        ntw[t * V + w] += 1;
        nt[t] += 1;
      }
    }
    history.push_back(log_likelihood());
  }

  std::vector<double> phi(T * V);
  for (std::size_t t = 0; t < T; ++t) {
    double row = 0.0;
    for (std::size_t w = 0; w < V; ++w) row += (phi[t * V + w] = (ntw[t * V + w] + beta) / (nt[t] + vbeta));
    for (std::size_t w = 0; w < V; ++w) phi[t * V + w] /= row;
  }
  TopicModel model(T, V, std::move(phi), alpha, beta, config.fold_in_iterations, config.fold_in_burn_in,
                   Rng::derive(config.seed, 0x1da));
  model.log_likelihood = std::move(history);
  return model;
}

}  // namespace esp::topics

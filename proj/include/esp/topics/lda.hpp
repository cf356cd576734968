#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "esp/spectra/spectrum.hpp"

namespace esp::topics {

struct LdaConfig {
  std::size_t topics = 100;
  /// Non-positive values mean 1 / topics.
  double alpha = 0.0;
  double beta = 0.0;
  std::size_t iterations = 200;
  std::uint64_t seed = 0;
  std::size_t fold_in_iterations = 50;
  std::size_t fold_in_burn_in = 20;
};

/// Topic-word matrix phi (topics x vocabulary, rows on the simplex) plus the
/// priors needed to fold in new documents.
class TopicModel {
 public:
  TopicModel() = default;
  TopicModel(std::size_t topics, std::size_t vocabulary, std::vector<double> phi, double alpha, double beta,
             std::size_t fold_in_iterations = 50, std::size_t fold_in_burn_in = 20, std::uint64_t seed = 0);

  std::size_t topics() const { return topics_; }
  std::size_t vocabulary() const { return vocabulary_; }
  double alpha() const { return alpha_; }
  double beta() const { return beta_; }
  std::uint64_t seed() const { return seed_; }
  std::size_t fold_in_iterations() const { return fold_in_iterations_; }
  std::size_t fold_in_burn_in() const { return fold_in_burn_in_; }
  const std::vector<double>& phi() const { return phi_; }
  double phi(std::size_t topic, std::size_t word) const { return phi_[topic * vocabulary_ + word]; }

  /// Fold-in Gibbs with phi held fixed. The theta estimate is averaged over
  /// the sweeps after burn-in. An empty document yields the uniform prior.
  std::vector<double> transform(const spectra::PeakDocument& doc) const;
  std::vector<double> transform(const spectra::PeakDocument& doc, std::uint64_t seed) const;

  /// Collapsed log p(w | z) after each training sweep.
  std::vector<double> log_likelihood;

 private:
  std::size_t topics_ = 0;
  std::size_t vocabulary_ = 0;
  std::vector<double> phi_;
  double alpha_ = 0.0;
  double beta_ = 0.0;
  std::size_t fold_in_iterations_ = 50;
  std::size_t fold_in_burn_in_ = 20;
  std::uint64_t seed_ = 0;
};

/// Collapsed Gibbs sampling. Requires at least `topics` non-empty documents.
TopicModel fit_lda(const std::vector<spectra::PeakDocument>& docs, std::size_t vocabulary, const LdaConfig& config);

}  // namespace esp::topics

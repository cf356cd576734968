#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "esp/chem/fingerprint.hpp"
#include "esp/chem/molecule.hpp"
#include "esp/model/encoders.hpp"
#include "esp/model/heads.hpp"
#include "esp/spectra/spectrum.hpp"

namespace esp::model {

enum class EncoderKind { Mlp, Gnn };

std::string to_string(EncoderKind kind);
/// Accepts "mlp", "mlp-pd", "gnn", "gnn-pd".
EncoderKind parse_encoder_kind(const std::string& text);

struct ModelConfig {
  EncoderKind kind = EncoderKind::Mlp;
  std::size_t bins = 1000;
  std::size_t fp_bits = chem::kDefaultFingerprintBits;
  int fp_radius = chem::kDefaultFingerprintRadius;
  std::size_t hidden = 512;
  std::size_t gnn_layers = 3;
  bool bidirectional = true;
  bool attention = true;
  std::size_t attention_heads = 4;
  std::size_t attention_rank = 64;
  double theta = 0.5;
  bool aux = true;
  std::size_t topics = 100;
  double lambda = 0.1;
  double dropout = 0.0;
  bool atom_aromatic = true;
  bool atom_charge = true;
};

/// Inputs for one prediction. The fingerprint is only read by the MLP path.
struct ModelInput {
  const chem::Molecule* molecule = nullptr;
  const chem::Fingerprint* fingerprint = nullptr;
  spectra::InstrumentSetting instrument;
  double precursor_mz = 0.0;
};

/// Encoder + bidirectional prediction head + peak attention + topic head.
class SpectrumModel {
 public:
  SpectrumModel(const ModelConfig& config, AtomFeaturizer featurizer, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  const AtomFeaturizer& featurizer() const { return featurizer_; }
  std::uint64_t seed() const { return seed_; }
  nn::ParameterSet& params() { return params_; }
  const nn::ParameterSet& params() const { return params_; }

  nn::Var encode(nn::Tape& tape, const ModelInput& in) const;

  struct Outputs {
    nn::Var spectrum;  // after attention and the final precursor mask
    nn::Var raw;       // before attention
    nn::Var topics;    // invalid when the aux head is disabled
  };
  Outputs forward(nn::Tape& tape, const ModelInput& in, Rng* dropout_rng = nullptr) const;

  /// total_loss against an L2-normalised target and (optionally) a topic distribution.
  nn::Var loss(nn::Tape& tape, const ModelInput& in, const std::vector<double>& target,
               const std::vector<double>* topic_target, Rng* dropout_rng = nullptr) const;

  std::vector<double> predict(const ModelInput& in) const;

  MlpEncoder& mlp() { return mlp_; }
  GineEncoder& gnn() { return gnn_; }
  PredictionHead& head() { return head_; }
  AttentionHead& attention() { return attention_; }
  AuxHead& aux() { return aux_; }

 private:
  ModelConfig config_;
  AtomFeaturizer featurizer_;
  std::uint64_t seed_;
  nn::ParameterSet params_;
  MlpEncoder mlp_;
  GineEncoder gnn_;
  PredictionHead head_;
  AttentionHead attention_;
  AuxHead aux_;
};

}  // namespace esp::model

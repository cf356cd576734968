#include "esp/model/spectrum_model.hpp"

#include "esp/common/error.hpp"
#include "esp/common/rng.hpp"

namespace esp::model {

using nn::Tape;
using nn::Var;

std::string to_string(EncoderKind kind) { return kind == EncoderKind::Mlp ? "mlp-pd" : "gnn-pd"; }

EncoderKind parse_encoder_kind(const std::string& text) {
  if (text == "mlp" || text == "mlp-pd") return EncoderKind::Mlp;
  if (text == "gnn" || text == "gnn-pd") return EncoderKind::Gnn;
  throw Error(ErrorCode::BadConfig, "unknown model kind '" + text + "'");
}

SpectrumModel::SpectrumModel(const ModelConfig& config, AtomFeaturizer featurizer, std::uint64_t seed)
    : config_(config), featurizer_(std::move(featurizer)), seed_(seed) {
  Rng rng(Rng::derive(seed, 0x5eed));
  const std::size_t h = config.hidden;
  if (config.kind == EncoderKind::Mlp)
    mlp_ = MlpEncoder(params_, "mlp", config.fp_bits, h, rng);
  else
    gnn_ = GineEncoder(params_, "gnn", featurizer_, h, config.gnn_layers, rng);
  head_ = PredictionHead(params_, "head", h, h, config.bins, config.bidirectional, rng);
  if (config.attention)
    attention_ = AttentionHead(params_, "attn", config.bins, config.attention_rank, config.attention_heads,
                               config.theta, rng);
  if (config.aux) aux_ = AuxHead(params_, "aux", h, h, config.topics, rng);
}

Var SpectrumModel::encode(Tape& tape, const ModelInput& in) const {
  if (config_.kind == EncoderKind::Mlp) {
    if (!in.fingerprint) throw Error(ErrorCode::InvalidArgument, "MLP encoder needs a fingerprint");
    return mlp_.encode(tape, *in.fingerprint, in.instrument);
  }
  if (!in.molecule) throw Error(ErrorCode::InvalidArgument, "graph encoder needs a molecule");
  return gnn_.encode(tape, *in.molecule, in.instrument);
}

SpectrumModel::Outputs SpectrumModel::forward(Tape& tape, const ModelInput& in, Rng* dropout_rng) const {
  Outputs out;
  Var z = encode(tape, in);
  out.raw = head_.predict(tape, z, in.precursor_mz, config_.dropout, dropout_rng);
  out.spectrum = out.raw;
  if (config_.attention)
    out.spectrum = tape.mul_const(attention_.update(tape, out.raw), precursor_mask(in.precursor_mz, config_.bins));
  if (config_.aux) out.topics = aux_.predict(tape, z);
  return out;
}

Var SpectrumModel::loss(Tape& tape, const ModelInput& in, const std::vector<double>& target,
                        const std::vector<double>* topic_target, Rng* dropout_rng) const {
  if (target.size() != config_.bins)
    throw Error(ErrorCode::DimensionMismatch, "target spectrum has " + std::to_string(target.size()) + " bins");
  Outputs out = forward(tape, in, dropout_rng);
  Var y = tape.row(target);
  if (config_.aux && topic_target && config_.lambda != 0.0)
    return total_loss(tape, out.spectrum, y, out.topics, *topic_target, config_.lambda);
  return spectral_loss(tape, out.spectrum, y);
}

std::vector<double> SpectrumModel::predict(const ModelInput& in) const {
  Tape tape(false, false);
  return tape.value(forward(tape, in).spectrum);
}

}  // namespace esp::model

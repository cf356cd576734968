#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "esp/chem/fingerprint.hpp"
#include "esp/chem/molecule.hpp"
#include "esp/nn/layers.hpp"
#include "esp/spectra/spectrum.hpp"

namespace esp::model {

/// Per-atom input features: element one-hot over a fixed vocabulary plus an
/// OTHER slot, atomic mass / 100, and optionally aromaticity and formal charge.
class AtomFeaturizer {
 public:
  AtomFeaturizer() = default;
  AtomFeaturizer(std::vector<std::string> elements, bool aromatic = true, bool charge = true);

  /// Vocabulary = sorted distinct elements of the given molecules.
  static AtomFeaturizer from_molecules(const std::vector<const chem::Molecule*>& mols, bool aromatic = true,
                                       bool charge = true);

  std::size_t size() const;
  /// Slot of an element; unseen elements map to the OTHER slot.
  std::size_t slot(const std::string& element) const;
  /// Row-major atoms x size() matrix.
  std::vector<double> features(const chem::Molecule& m) const;

  const std::vector<std::string>& elements() const { return elements_; }
  bool use_aromatic() const { return aromatic_; }
  bool use_charge() const { return charge_; }

 private:
  std::vector<std::string> elements_;
  bool aromatic_ = true;
  bool charge_ = true;
};

/// Dense 0/1 row for a fingerprint.
std::vector<double> fingerprint_row(const chem::Fingerprint& fp);

/// Fingerprint path: z = relu(W [relu(W_fp fp); relu(W_is is)]).
class MlpEncoder {
 public:
  MlpEncoder() = default;
  MlpEncoder(nn::ParameterSet& params, const std::string& prefix, std::size_t fp_bits, std::size_t hidden,
             Rng& rng);

  std::size_t fp_bits() const { return fp_net_.in(); }
  std::size_t latent_size() const { return out_net_.out(); }

  nn::Var encode(nn::Tape& tape, const chem::Fingerprint& fp, const spectra::InstrumentSetting& is) const;

  nn::Dense& fp_net() { return fp_net_; }
  nn::Dense& is_net() { return is_net_; }
  nn::Dense& out_net() { return out_net_; }

 private:
  nn::Dense fp_net_;
  nn::Dense is_net_;
  nn::Dense out_net_;
};

/// Graph path: GINE-style message passing over the molecular graph with
/// mean readout.
class GineEncoder {
 public:
  GineEncoder() = default;
  GineEncoder(nn::ParameterSet& params, const std::string& prefix, AtomFeaturizer featurizer,
              std::size_t hidden, std::size_t layers, Rng& rng);

  std::size_t layer_count() const { return node_nets_.size(); }
  std::size_t latent_size() const { return hidden_; }
  const AtomFeaturizer& featurizer() const { return featurizer_; }

  /// h0 (atoms x H) = relu(W [relu(W_a x_atom); relu(W_is is)]).
  nn::Var init_node_states(nn::Tape& tape, const chem::Molecule& m, const spectra::InstrumentSetting& is) const;
  /// m_v = sum of neighbour states + sum of incident edge embeddings;
  /// h'_v = relu(NN_k(m_v)).
  nn::Var layer(nn::Tape& tape, nn::Var h, const chem::Molecule& m, std::size_t k) const;
  nn::Var node_states(nn::Tape& tape, const chem::Molecule& m, const spectra::InstrumentSetting& is) const;
  nn::Var readout_mean(nn::Tape& tape, nn::Var h) const { return tape.mean_rows(h); }
  nn::Var encode(nn::Tape& tape, const chem::Molecule& m, const spectra::InstrumentSetting& is) const;

  nn::Dense& node_net(std::size_t k) { return node_nets_[k]; }
  nn::Dense& edge_net(std::size_t k) { return edge_nets_[k]; }
  nn::Dense& is_net() { return is_net_; }

 private:
  AtomFeaturizer featurizer_;
  std::size_t hidden_ = 0;
  nn::Dense atom_net_;
  nn::Dense is_net_;
  nn::Dense init_net_;
  std::vector<nn::Dense> edge_nets_;
  std::vector<nn::Dense> node_nets_;
};

/// One-hot bond orders, bonds x 4.
std::vector<double> bond_features(const chem::Molecule& m);

}  // namespace esp::model

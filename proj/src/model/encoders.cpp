#include "esp/model/encoders.hpp"

#include <algorithm>
#include <set>

#include "esp/chem/elements.hpp"
#include "esp/common/error.hpp"

namespace esp::model {

using nn::Activation;
using nn::Dense;
using nn::Tape;
using nn::Var;

AtomFeaturizer::AtomFeaturizer(std::vector<std::string> elements, bool aromatic, bool charge)
    : elements_(std::move(elements)), aromatic_(aromatic), charge_(charge) {
  std::sort(elements_.begin(), elements_.end());
  elements_.erase(std::unique(elements_.begin(), elements_.end()), elements_.end());
}

AtomFeaturizer AtomFeaturizer::from_molecules(const std::vector<const chem::Molecule*>& mols, bool aromatic,
                                              bool charge) {
  std::set<std::string> seen;
  for (const auto* m : mols)
    for (const auto& a : m->atoms()) seen.insert(a.element);
  return AtomFeaturizer({seen.begin(), seen.end()}, aromatic, charge);
}

std::size_t AtomFeaturizer::size() const { return elements_.size() + 2 + aromatic_ + charge_; }

std::size_t AtomFeaturizer::slot(const std::string& element) const {
  auto it = std::lower_bound(elements_.begin(), elements_.end(), element);
  if (it != elements_.end() && *it == element) return static_cast<std::size_t>(it - elements_.begin());
  return elements_.size();
}

std::vector<double> AtomFeaturizer::features(const chem::Molecule& m) const {
  const std::size_t w = size();
  std::vector<double> x(m.atom_count() * w, 0.0);
  for (std::size_t i = 0; i < m.atom_count(); ++i) {
    const chem::Atom& a = m.atom(i);
    double* row = x.data() + i * w;
    row[slot(a.element)] = 1.0;
    std::size_t col = elements_.size() + 1;
    double mass = a.isotope > 0 ? chem::isotope_mass(a.element, a.isotope) : 0.0;
    if (mass == 0.0) {
      const auto* info = chem::find_element(a.element);
      mass = info ? info->monoisotopic_mass : 0.0;
    }
    row[col++] = mass / 100.0;
    if (aromatic_) row[col++] = a.aromatic ? 1.0 : 0.0;
    if (charge_) row[col++] = static_cast<double>(a.formal_charge);
  }
  return x;
}

std::vector<double> fingerprint_row(const chem::Fingerprint& fp) {
  std::vector<double> x(fp.size(), 0.0);
  for (std::size_t b : fp.on_bits()) x[b] = 1.0;
  return x;
}

std::vector<double> bond_features(const chem::Molecule& m) {
  std::vector<double> x(m.bond_count() * chem::kBondOrderCount, 0.0);
  for (std::size_t e = 0; e < m.bond_count(); ++e)
    x[e * chem::kBondOrderCount + static_cast<std::size_t>(m.bonds()[e].order)] = 1.0;
  return x;
}

MlpEncoder::MlpEncoder(nn::ParameterSet& params, const std::string& prefix, std::size_t fp_bits,
                       std::size_t hidden, Rng& rng)
    : fp_net_(params, prefix + ".fp", fp_bits, hidden, Activation::Relu, rng),
      is_net_(params, prefix + ".is", spectra::InstrumentSetting::feature_size(), hidden, Activation::Relu, rng),
      out_net_(params, prefix + ".out", 2 * hidden, hidden, Activation::Relu, rng) {}

Var MlpEncoder::encode(Tape& tape, const chem::Fingerprint& fp, const spectra::InstrumentSetting& is) const {
  if (fp.size() != fp_bits())
    throw Error(ErrorCode::DimensionMismatch, "fingerprint has " + std::to_string(fp.size()) +
                                                  " bits, encoder expects " + std::to_string(fp_bits()));
  Var a = fp_net_(tape, tape.row(fingerprint_row(fp)));
  Var b = is_net_(tape, tape.row(is.features()));
  return out_net_(tape, tape.concat_cols(a, b));
}

GineEncoder::GineEncoder(nn::ParameterSet& params, const std::string& prefix, AtomFeaturizer featurizer,
                         std::size_t hidden, std::size_t layers, Rng& rng)
    : featurizer_(std::move(featurizer)), hidden_(hidden) {
  if (layers == 0) throw Error(ErrorCode::InvalidArgument, "GINE stack needs at least one layer");
  atom_net_ = Dense(params, prefix + ".atom", featurizer_.size(), hidden, Activation::Relu, rng);
  is_net_ = Dense(params, prefix + ".is", spectra::InstrumentSetting::feature_size(), hidden, Activation::Relu, rng);
  init_net_ = Dense(params, prefix + ".init", 2 * hidden, hidden, Activation::Relu, rng);
  for (std::size_t k = 0; k < layers; ++k) {
    edge_nets_.emplace_back(params, prefix + ".edge" + std::to_string(k), chem::kBondOrderCount, hidden,
                            Activation::Identity, rng);
    node_nets_.emplace_back(params, prefix + ".layer" + std::to_string(k), hidden, hidden, Activation::Relu, rng);
  }
}

Var GineEncoder::init_node_states(Tape& tape, const chem::Molecule& m, const spectra::InstrumentSetting& is) const {
  if (m.empty()) throw Error(ErrorCode::EmptyMolecule, "cannot encode a molecule without atoms");
  const std::size_t n = m.atom_count();
  Var atoms = atom_net_(tape, tape.constant(n, featurizer_.size(), featurizer_.features(m)));
  Var setting = tape.repeat_rows(is_net_(tape, tape.row(is.features())), n);
  return init_net_(tape, tape.concat_cols(atoms, setting));
}

Var GineEncoder::layer(Tape& tape, Var h, const chem::Molecule& m, std::size_t k) const {
  const std::size_t n = m.atom_count();
  const std::size_t nb = m.bond_count();
  std::vector<std::size_t> from, to, edge, end;
  from.reserve(2 * nb);
  to.reserve(2 * nb);
  for (std::size_t e = 0; e < nb; ++e) {
    const chem::Bond& b = m.bonds()[e];
    from.push_back(b.a);
    to.push_back(b.b);
    from.push_back(b.b);
    to.push_back(b.a);
    edge.push_back(e);
    end.push_back(b.a);
    edge.push_back(e);
    end.push_back(b.b);
  }
  Var msg = tape.index_add_rows(h, std::move(from), std::move(to), n);
  if (nb > 0) {
    Var he = edge_nets_[k](tape, tape.constant(nb, chem::kBondOrderCount, bond_features(m)));
    msg = tape.add(msg, tape.index_add_rows(he, std::move(edge), std::move(end), n));
  }
  return node_nets_[k](tape, msg);
}

Var GineEncoder::node_states(Tape& tape, const chem::Molecule& m, const spectra::InstrumentSetting& is) const {
  Var h = init_node_states(tape, m, is);
  for (std::size_t k = 0; k < node_nets_.size(); ++k) h = layer(tape, h, m, k);
  return h;
}

Var GineEncoder::encode(Tape& tape, const chem::Molecule& m, const spectra::InstrumentSetting& is) const {
  return readout_mean(tape, node_states(tape, m, is));
}

}  // namespace esp::model

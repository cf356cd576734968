#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "esp/chem/molecule.hpp"

namespace esp::chem {

/// Parse a SMILES string into a molecular graph.
///
/// Supported: organic-subset atoms (B C N O P S F Cl Br I and aromatic
/// b c n o p s), bracket atoms with isotope, hydrogen count and charge, ring
/// closures 1-9 and %nn, branches, explicit bond orders (- = # :) and '.'
/// component separators. Stereo markers (/ \ @) are accepted and dropped; a
/// note is appended to `warnings` when given. Lowercase aromaticity is taken
/// as written.
///
/// Implicit hydrogens on organic-subset atoms are filled to the lowest
/// default valence that accommodates the explicit bonds. Aromatic atoms count
/// one extra valence unit and only use their lowest default valence.
///
/// Throws esp::Error with one of UnbalancedRingClosure,
/// UnbalancedParenthesis, UnknownElement, ValenceOverflow or SmilesSyntax;
/// `offset()` is the byte offset of the offending character.
Molecule parse_smiles(std::string_view smiles, std::vector<std::string>* warnings = nullptr);

/// Write a SMILES string that parses back to an isomorphic graph.
std::string render_smiles(const Molecule& m);

/// Hydrogens the parser would assign to an organic-subset atom with the
/// given bond valence, or -1 if the valence cannot be satisfied.
int implicit_hydrogens(std::string_view element, bool aromatic, int bond_valence);

}  // namespace esp::chem

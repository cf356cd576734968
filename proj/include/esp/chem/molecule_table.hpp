#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "esp/chem/formula.hpp"
#include "esp/chem/molecule.hpp"

namespace esp::chem {

struct MoleculeEntry {
  std::string id;
  Molecule molecule;
  Formula formula;
};

/// Reads `id<TAB>smiles[<TAB>formula]` rows. Blank lines and lines starting
/// with '#' are skipped. A missing formula column is recomputed; a declared
/// formula that disagrees with the structure throws FormulaMismatch when
/// `strict`, otherwise the row is skipped with a note in `warnings`.
std::vector<MoleculeEntry> read_molecule_table(std::istream& in, bool strict = true,
                                               std::vector<std::string>* warnings = nullptr);

void write_molecule_table(std::ostream& out, const std::vector<MoleculeEntry>& entries);

/// Split a line on tabs, keeping empty fields.
std::vector<std::string> split_tabs(const std::string& line);

}  // namespace esp::chem

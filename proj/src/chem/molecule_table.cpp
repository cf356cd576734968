#include "esp/chem/molecule_table.hpp"

#include <istream>
#include <ostream>

#include "esp/chem/smiles.hpp"
#include "esp/common/error.hpp"

namespace esp::chem {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t tab = line.find('\t', start);
    if (tab == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  if (!out.empty() && !out.back().empty() && out.back().back() == '\r') out.back().pop_back();
  return out;
}

std::vector<MoleculeEntry> read_molecule_table(std::istream& in, bool strict,
                                               std::vector<std::string>* warnings) {
  std::vector<MoleculeEntry> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    auto cols = split_tabs(line);
    if (cols.size() < 2 || cols[0].empty() || cols[1].empty())
      throw Error(ErrorCode::MalformedRecord, "expected id<TAB>smiles[<TAB>formula]", lineno);
    MoleculeEntry e;
    e.id = cols[0];
    try {
      e.molecule = parse_smiles(cols[1]);
    } catch (const Error& err) {
      throw Error(err.code(), "line " + std::to_string(lineno) + ": " + err.what(), lineno);
    }
    e.formula = molecular_formula(e.molecule);
    if (cols.size() >= 3 && !cols[2].empty()) {
      Formula declared = Formula::parse(cols[2]);
      if (!(declared == e.formula)) {
        std::string msg = "declared formula " + cols[2] + " disagrees with structure (" +
                          e.formula.to_string() + ") for " + e.id;
        if (strict) throw Error(ErrorCode::FormulaMismatch, msg, lineno);
        if (warnings) warnings->push_back(msg);
        continue;
      }
    }
    out.push_back(std::move(e));
  }
  return out;
}

void write_molecule_table(std::ostream& out, const std::vector<MoleculeEntry>& entries) {
  for (const auto& e : entries)
    out << e.id << '\t' << render_smiles(e.molecule) << '\t' << e.formula.to_string() << '\n';
}

}  // namespace esp::chem

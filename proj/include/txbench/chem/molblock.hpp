#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include "txbench/chem/molecule.hpp"

namespace txbench::chem {

class MolBlockError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// MDL V2000 connection table with zero coordinates. Hydrogen counts go in
// the atom-block hydrogen field (count + 1) so the graph round-trips; charges
// and isotopes use M  CHG and M  ISO.
std::string write_molblock(const MolecularGraph& graph, std::string_view title = "");

// Reads the V2000 subset written above. Atoms with an empty hydrogen field get
// standard-valence hydrogens. Bond type 4 marks both ends aromatic.
MolecularGraph parse_molblock(std::string_view block);

}  // namespace txbench::chem

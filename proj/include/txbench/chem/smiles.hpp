#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

#include "txbench/chem/molecule.hpp"

namespace txbench::chem {

enum class SmilesErrorKind {
  kEmptyInput,
  kUnbalancedRingClosure,
  kUnbalancedParenthesis,
  kUnknownAtomSymbol,
  kInvalidBondPlacement,
};

std::string_view to_string(SmilesErrorKind kind);

class SmilesError : public std::runtime_error {
 public:
  SmilesError(SmilesErrorKind kind, std::size_t offset, const std::string& detail);

  SmilesErrorKind kind() const { return kind_; }
  // Byte offset into the input where the problem was detected.
  std::size_t offset() const { return offset_; }

 private:
  SmilesErrorKind kind_;
  std::size_t offset_;
};

// Parses the organic subset, bracket atoms (isotope, chirality, H count,
// charge, atom class), branches, ring closures including %nn, bond symbols
// and dot-separated components. Stereo markers are accepted and dropped.
MolecularGraph parse_smiles(std::string_view smiles);

// Deterministic canonical SMILES. Isomorphic graphs serialize identically;
// atom classes are not written.
std::string canonical_serialize(const MolecularGraph& graph);

}  // namespace txbench::chem

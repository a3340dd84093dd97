#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace txbench::chem {

enum class BondOrder : std::uint8_t { kSingle = 1, kDouble = 2, kTriple = 3, kAromatic = 4 };

struct Atom {
  int atomic_number = 6;
  int charge = 0;
  bool aromatic = false;
  int h_count = 0;
  std::optional<int> isotope;
  // Reaction atom-map label (":n" inside brackets); 0 when absent.
  int atom_class = 0;
  // True for organic-subset atoms written without brackets; their h_count
  // is derived from standard valences.
  bool implicit_h = false;
};

struct Bond {
  int a = 0;
  int b = 0;
  BondOrder order = BondOrder::kSingle;

  int other(int atom) const { return atom == a ? b : a; }
};

struct Neighbor {
  int atom;
  int bond;
};

class MolecularGraph {
 public:
  int add_atom(const Atom& atom);

  // Returns the new bond index. Throws std::invalid_argument on self loops,
  // out-of-range endpoints and duplicate bonds.
  int add_bond(int a, int b, BondOrder order);

  // Computes ring membership and implicit hydrogens. Called by the parser;
  // call again after building a graph by hand.
  void finalize();

  std::span<const Atom> atoms() const { return atoms_; }
  std::span<const Bond> bonds() const { return bonds_; }
  const Atom& atom(int i) const { return atoms_[static_cast<std::size_t>(i)]; }
  Atom& mutable_atom(int i) { return atoms_[static_cast<std::size_t>(i)]; }
  const Bond& bond(int i) const { return bonds_[static_cast<std::size_t>(i)]; }
  std::span<const Neighbor> neighbors(int atom) const {
    return adjacency_[static_cast<std::size_t>(atom)];
  }

  int atom_count() const { return static_cast<int>(atoms_.size()); }
  int bond_count() const { return static_cast<int>(bonds_.size()); }
  bool empty() const { return atoms_.empty(); }

  bool in_ring(int atom) const { return atom_in_ring_[static_cast<std::size_t>(atom)]; }
  bool bond_in_ring(int bond) const { return bond_in_ring_[static_cast<std::size_t>(bond)]; }

  int find_bond(int a, int b) const;

  // Component id per atom, numbered in order of first appearance.
  std::vector<int> components() const;

  // Returns a copy whose atom i is this graph's atom order[i].
  MolecularGraph permuted(std::span<const int> order) const;

 private:
  std::vector<Atom> atoms_;
  std::vector<Bond> bonds_;
  std::vector<std::vector<Neighbor>> adjacency_;
  std::vector<bool> atom_in_ring_;
  std::vector<bool> bond_in_ring_;
};

// Element table lookups. Returns -1 for unknown symbols; "*" is 0.
int atomic_number(std::string_view symbol);
std::string_view element_symbol(int atomic_number);

bool is_organic_subset(int atomic_number);

// Hydrogens implied for an unbracketed atom with the given bond environment.
// `bond_order_sum` counts aromatic bonds as 1.
int implicit_hydrogens(int atomic_number, bool aromatic, int bond_order_sum);

}  // namespace txbench::chem

#include "txbench/chem/molecule.hpp"

#include <algorithm>
#include <array>
#include <functional>
#include <stdexcept>
#include <string>

namespace txbench::chem {

namespace {

constexpr std::array<std::string_view, 119> kSymbols = {
    "*",  "H",  "He", "Li", "Be", "B",  "C",  "N",  "O",  "F",  "Ne", "Na", "Mg", "Al", "Si",
    "P",  "S",  "Cl", "Ar", "K",  "Ca", "Sc", "Ti", "V",  "Cr", "Mn", "Fe", "Co", "Ni", "Cu",
    "Zn", "Ga", "Ge", "As", "Se", "Br", "Kr", "Rb", "Sr", "Y",  "Zr", "Nb", "Mo", "Tc", "Ru",
    "Rh", "Pd", "Ag", "Cd", "In", "Sn", "Sb", "Te", "I",  "Xe", "Cs", "Ba", "La", "Ce", "Pr",
    "Nd", "Pm", "Sm", "Eu", "Gd", "Tb", "Dy", "Ho", "Er", "Tm", "Yb", "Lu", "Hf", "Ta", "W",
    "Re", "Os", "Ir", "Pt", "Au", "Hg", "Tl", "Pb", "Bi", "Po", "At", "Rn", "Fr", "Ra", "Ac",
    "Th", "Pa", "U",  "Np", "Pu", "Am", "Cm", "Bk", "Cf", "Es", "Fm", "Md", "No", "Lr", "Rf",
    "Db", "Sg", "Bh", "Hs", "Mt", "Ds", "Rg", "Cn", "Nh", "Fl", "Mc", "Lv", "Ts", "Og"};

int bond_valence(BondOrder order) {
  switch (order) {
    case BondOrder::kSingle: return 1;
    case BondOrder::kDouble: return 2;
    case BondOrder::kTriple: return 3;
    case BondOrder::kAromatic: return 1;
  }
  return 1;
}

std::span<const int> default_valences(int z) {
  static constexpr int kB[] = {3};
  static constexpr int kC[] = {4};
  static constexpr int kN[] = {3, 5};
  static constexpr int kO[] = {2};
  static constexpr int kP[] = {3, 5};
  static constexpr int kS[] = {2, 4, 6};
  static constexpr int kHalogen[] = {1};
  switch (z) {
    case 5: return kB;
    case 6: return kC;
    case 7: return kN;
    case 8: return kO;
    case 15: return kP;
    case 16: return kS;
    case 9:
    case 17:
    case 35:
    case 53: return kHalogen;
    default: return {};
  }
}

}  // namespace

int atomic_number(std::string_view symbol) {
  for (std::size_t z = 0; z < kSymbols.size(); ++z) {
    if (kSymbols[z] == symbol) return static_cast<int>(z);
  }
  return -1;
}

std::string_view element_symbol(int z) {
  if (z < 0 || z >= static_cast<int>(kSymbols.size())) return "?";
  return kSymbols[static_cast<std::size_t>(z)];
}

bool is_organic_subset(int z) { return !default_valences(z).empty(); }

int implicit_hydrogens(int z, bool aromatic, int bond_order_sum) {
  const auto valences = default_valences(z);
  if (valences.empty()) return 0;
  if (aromatic) {
    const bool needs_pi = z == 5 || z == 6 || z == 7 || z == 15;
    return std::max(0, valences.front() - bond_order_sum - (needs_pi ? 1 : 0));
  }
  for (int v : valences) {
    if (v >= bond_order_sum) return v - bond_order_sum;
  }
  return 0;
}

int MolecularGraph::add_atom(const Atom& atom) {
  atoms_.push_back(atom);
  adjacency_.emplace_back();
  atom_in_ring_.push_back(false);
  return atom_count() - 1;
}

int MolecularGraph::add_bond(int a, int b, BondOrder order) {
  if (a < 0 || b < 0 || a >= atom_count() || b >= atom_count())
    throw std::invalid_argument("bond endpoint out of range");
  if (a == b) throw std::invalid_argument("bond endpoints must differ");
  if (find_bond(a, b) >= 0) throw std::invalid_argument("duplicate bond");
  bonds_.push_back(Bond{a, b, order});
  const int idx = bond_count() - 1;
  adjacency_[static_cast<std::size_t>(a)].push_back({b, idx});
  adjacency_[static_cast<std::size_t>(b)].push_back({a, idx});
  bond_in_ring_.push_back(false);
  return idx;
}

int MolecularGraph::find_bond(int a, int b) const {
  for (const auto& n : neighbors(a)) {
    if (n.atom == b) return n.bond;
  }
  return -1;
}

void MolecularGraph::finalize() {
  // Ring bonds are exactly the non-bridge bonds.
  const auto n = static_cast<std::size_t>(atom_count());
  std::vector<int> disc(n, -1), low(n, 0);
  std::fill(bond_in_ring_.begin(), bond_in_ring_.end(), true);
  int timer = 0;
  std::function<void(int, int)> dfs = [&](int u, int parent_bond) {
    disc[static_cast<std::size_t>(u)] = low[static_cast<std::size_t>(u)] = timer++;
    for (const auto& nb : neighbors(u)) {
      if (nb.bond == parent_bond) continue;
      const auto v = static_cast<std::size_t>(nb.atom);
      if (disc[v] >= 0) {
        low[static_cast<std::size_t>(u)] = std::min(low[static_cast<std::size_t>(u)], disc[v]);
      } else {
        dfs(nb.atom, nb.bond);
        low[static_cast<std::size_t>(u)] = std::min(low[static_cast<std::size_t>(u)], low[v]);
        if (low[v] > disc[static_cast<std::size_t>(u)])
          bond_in_ring_[static_cast<std::size_t>(nb.bond)] = false;
      }
    }
  };
  for (int i = 0; i < atom_count(); ++i) {
    if (disc[static_cast<std::size_t>(i)] < 0) dfs(i, -1);
  }
  for (int i = 0; i < atom_count(); ++i) {
    bool ring = false;
    int valence = 0;
    for (const auto& nb : neighbors(i)) {
      ring = ring || bond_in_ring(nb.bond);
      valence += bond_valence(bond(nb.bond).order);
    }
    atom_in_ring_[static_cast<std::size_t>(i)] = ring;
    auto& a = atoms_[static_cast<std::size_t>(i)];
    if (a.implicit_h) a.h_count = implicit_hydrogens(a.atomic_number, a.aromatic, valence);
  }
}

std::vector<int> MolecularGraph::components() const {
  std::vector<int> comp(static_cast<std::size_t>(atom_count()), -1);
  int next = 0;
  std::vector<int> stack;
  for (int s = 0; s < atom_count(); ++s) {
    if (comp[static_cast<std::size_t>(s)] >= 0) continue;
    comp[static_cast<std::size_t>(s)] = next;
    stack.push_back(s);
    while (!stack.empty()) {
      const int u = stack.back();
      stack.pop_back();
      for (const auto& nb : neighbors(u)) {
        if (comp[static_cast<std::size_t>(nb.atom)] < 0) {
          comp[static_cast<std::size_t>(nb.atom)] = next;
          stack.push_back(nb.atom);
        }
      }
    }
    ++next;
  }
  return comp;
}

MolecularGraph MolecularGraph::permuted(std::span<const int> order) const {
  if (order.size() != atoms_.size()) throw std::invalid_argument("permutation size mismatch");
  std::vector<int> new_index(atoms_.size(), -1);
  MolecularGraph out;
  for (std::size_t i = 0; i < order.size(); ++i) {
    new_index[static_cast<std::size_t>(order[i])] = static_cast<int>(i);
    out.add_atom(atom(order[i]));
  }
  // Bond order also follows the permutation so adjacency lists differ too.
  std::vector<int> bond_order(bonds_.size());
  for (std::size_t i = 0; i < bond_order.size(); ++i) bond_order[i] = static_cast<int>(i);
  std::sort(bond_order.begin(), bond_order.end(), [&](int x, int y) {
    const auto kx = std::minmax(new_index[static_cast<std::size_t>(bond(x).a)],
                                new_index[static_cast<std::size_t>(bond(x).b)]);
    const auto ky = std::minmax(new_index[static_cast<std::size_t>(bond(y).a)],
                                new_index[static_cast<std::size_t>(bond(y).b)]);
    return kx < ky;
  });
  for (int bi : bond_order) {
    const auto& b = bond(bi);
    out.add_bond(new_index[static_cast<std::size_t>(b.b)], new_index[static_cast<std::size_t>(b.a)],
                 b.order);
  }
  out.finalize();
  return out;
}

}  // namespace txbench::chem

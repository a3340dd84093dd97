#include <algorithm>
#include <functional>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "txbench/chem/smiles.hpp"

namespace txbench::chem {

namespace {

template <typename Key>
int dense_rank(const std::vector<Key>& keys, std::vector<int>& ranks) {
  std::vector<Key> sorted = keys;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  for (std::size_t i = 0; i < keys.size(); ++i) {
    ranks[i] = static_cast<int>(std::lower_bound(sorted.begin(), sorted.end(), keys[i]) - sorted.begin());
  }
  return static_cast<int>(sorted.size());
}

int bond_valence(BondOrder o) { return o == BondOrder::kAromatic ? 1 : static_cast<int>(o); }

// Iterated neighborhood refinement until the partition stops splitting.
int refine(const MolecularGraph& g, std::vector<int>& ranks, int classes) {
  const auto n = ranks.size();
  using Key = std::pair<int, std::vector<std::pair<int, int>>>;
  std::vector<Key> keys(n);
  while (true) {
    for (std::size_t i = 0; i < n; ++i) {
      keys[i].first = ranks[i];
      keys[i].second.clear();
      for (const auto& nb : g.neighbors(static_cast<int>(i))) {
        keys[i].second.emplace_back(static_cast<int>(g.bond(nb.bond).order),
                                    ranks[static_cast<std::size_t>(nb.atom)]);
      }
      std::sort(keys[i].second.begin(), keys[i].second.end());
    }
    const int next = dense_rank(keys, ranks);
    if (next == classes) return classes;
    classes = next;
  }
}

std::vector<int> canonical_ranks(const MolecularGraph& g) {
  const auto n = static_cast<std::size_t>(g.atom_count());
  using Inv = std::tuple<int, int, int, bool, int, int, bool>;
  std::vector<Inv> inv(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& a = g.atom(static_cast<int>(i));
    inv[i] = {a.atomic_number,
              a.isotope.value_or(-1),
              a.charge,
              a.aromatic,
              a.h_count,
              static_cast<int>(g.neighbors(static_cast<int>(i)).size()),
              g.in_ring(static_cast<int>(i))};
  }
  std::vector<int> ranks(n);
  int classes = refine(g, ranks, dense_rank(inv, ranks));
  while (classes < static_cast<int>(n)) {
    // Break the lowest tie and refine again.
    std::vector<int> count(n, 0);
    for (int r : ranks) ++count[static_cast<std::size_t>(r)];
    int tied = 0;
    while (count[static_cast<std::size_t>(tied)] < 2) ++tied;
    const auto chosen = static_cast<std::size_t>(
        std::find(ranks.begin(), ranks.end(), tied) - ranks.begin());
    std::vector<std::pair<int, int>> keys(n);
    for (std::size_t i = 0; i < n; ++i) keys[i] = {ranks[i], (ranks[i] == tied && i != chosen) ? 1 : 0};
    classes = refine(g, ranks, dense_rank(keys, ranks));
  }
  return ranks;
}

std::string atom_text(const MolecularGraph& g, int idx) {
  const auto& a = g.atom(idx);
  int valence = 0;
  for (const auto& nb : g.neighbors(idx)) valence += bond_valence(g.bond(nb.bond).order);
  std::string sym(element_symbol(a.atomic_number));
  const bool organic = is_organic_subset(a.atomic_number);
  const bool aromatic_bare_ok =
      !a.aromatic || a.atomic_number == 5 || a.atomic_number == 6 || a.atomic_number == 7 ||
      a.atomic_number == 8 || a.atomic_number == 15 || a.atomic_number == 16;
  bool bracket = a.charge != 0 || a.isotope.has_value() || !aromatic_bare_ok;
  if (a.atomic_number == 0) {
    bracket = bracket || a.h_count != 0;
  } else {
    bracket = bracket || !organic ||
              a.h_count != implicit_hydrogens(a.atomic_number, a.aromatic, valence);
  }
  if (a.aromatic) sym[0] = static_cast<char>(sym[0] - 'A' + 'a');
  if (!bracket) return sym;
  std::string out = "[";
  if (a.isotope) out += std::to_string(*a.isotope);
  out += sym;
  if (a.h_count == 1) out += "H";
  if (a.h_count > 1) out += "H" + std::to_string(a.h_count);
  if (a.charge > 0) out += "+";
  if (a.charge < 0) out += "-";
  if (a.charge > 1 || a.charge < -1) out += std::to_string(a.charge > 0 ? a.charge : -a.charge);
  out += "]";
  return out;
}

std::string bond_text(const MolecularGraph& g, int bond_idx) {
  const auto& b = g.bond(bond_idx);
  const bool both_aromatic = g.atom(b.a).aromatic && g.atom(b.b).aromatic;
  switch (b.order) {
    case BondOrder::kSingle: return both_aromatic ? "-" : "";
    case BondOrder::kDouble: return "=";
    case BondOrder::kTriple: return "#";
    case BondOrder::kAromatic: return both_aromatic ? "" : ":";
  }
  return "";
}

std::string ring_label(int digit) {
  return digit < 10 ? std::to_string(digit) : "%" + std::to_string(digit);
}

class Writer {
 public:
  Writer(const MolecularGraph& g, const std::vector<int>& ranks)
      : g_(g),
        ranks_(ranks),
        visited_(static_cast<std::size_t>(g.atom_count()), false),
        bond_used_(static_cast<std::size_t>(g.bond_count()), false),
        children_(static_cast<std::size_t>(g.atom_count())),
        ring_open_(static_cast<std::size_t>(g.atom_count())),
        ring_close_(static_cast<std::size_t>(g.atom_count())) {}

  std::string component(int root) {
    plan(root);
    std::string out;
    emit(root, -1, out);
    return out;
  }

 private:
  std::vector<Neighbor> ordered_neighbors(int u) const {
    std::vector<Neighbor> nbs(g_.neighbors(u).begin(), g_.neighbors(u).end());
    std::sort(nbs.begin(), nbs.end(), [&](const Neighbor& x, const Neighbor& y) {
      return ranks_[static_cast<std::size_t>(x.atom)] < ranks_[static_cast<std::size_t>(y.atom)];
    });
    return nbs;
  }

  void plan(int u) {
    visited_[static_cast<std::size_t>(u)] = true;
    for (const auto& nb : ordered_neighbors(u)) {
      if (bond_used_[static_cast<std::size_t>(nb.bond)]) continue;
      bond_used_[static_cast<std::size_t>(nb.bond)] = true;
      if (visited_[static_cast<std::size_t>(nb.atom)]) {
        ring_open_[static_cast<std::size_t>(nb.atom)].push_back(nb);
        ring_close_[static_cast<std::size_t>(u)].push_back({nb.atom, nb.bond});
      } else {
        children_[static_cast<std::size_t>(u)].push_back(nb);
        plan(nb.atom);
      }
    }
  }

  void emit(int u, int via_bond, std::string& out) {
    if (via_bond >= 0) out += bond_text(g_, via_bond);
    out += atom_text(g_, u);
    auto by_rank = [&](const Neighbor& x, const Neighbor& y) {
      return ranks_[static_cast<std::size_t>(x.atom)] < ranks_[static_cast<std::size_t>(y.atom)];
    };
    auto closes = ring_close_[static_cast<std::size_t>(u)];
    std::sort(closes.begin(), closes.end(), by_rank);
    for (const auto& nb : closes) {
      const int digit = digit_of_bond_.at(nb.bond);
      out += ring_label(digit);
      free_digits_.push_back(digit);
      std::sort(free_digits_.begin(), free_digits_.end());
    }
    auto opens = ring_open_[static_cast<std::size_t>(u)];
    std::sort(opens.begin(), opens.end(), by_rank);
    for (const auto& nb : opens) {
      int digit;
      if (!free_digits_.empty()) {
        digit = free_digits_.front();
        free_digits_.erase(free_digits_.begin());
      } else {
        digit = next_digit_++;
      }
      digit_of_bond_[nb.bond] = digit;
      out += bond_text(g_, nb.bond) + ring_label(digit);
    }
    const auto& kids = children_[static_cast<std::size_t>(u)];
    for (std::size_t i = 0; i < kids.size(); ++i) {
      const bool last = i + 1 == kids.size();
      if (!last) out += "(";
      emit(kids[i].atom, kids[i].bond, out);
      if (!last) out += ")";
    }
  }

  const MolecularGraph& g_;
  const std::vector<int>& ranks_;
  std::vector<bool> visited_;
  std::vector<bool> bond_used_;
  std::vector<std::vector<Neighbor>> children_;
  std::vector<std::vector<Neighbor>> ring_open_;
  std::vector<std::vector<Neighbor>> ring_close_;
  std::map<int, int> digit_of_bond_;
  std::vector<int> free_digits_;
  int next_digit_ = 1;
};

}  // namespace

std::string canonical_serialize(const MolecularGraph& g) {
  if (g.empty()) return {};
  const auto ranks = canonical_ranks(g);
  const auto comp = g.components();
  const int n_comp = *std::max_element(comp.begin(), comp.end()) + 1;
  std::vector<int> roots(static_cast<std::size_t>(n_comp), -1);
  for (int i = 0; i < g.atom_count(); ++i) {
    auto& r = roots[static_cast<std::size_t>(comp[static_cast<std::size_t>(i)])];
    if (r < 0 || ranks[static_cast<std::size_t>(i)] < ranks[static_cast<std::size_t>(r)]) r = i;
  }
  std::vector<std::string> parts;
  for (int root : roots) {
    Writer w(g, ranks);
    parts.push_back(w.component(root));
  }
  std::sort(parts.begin(), parts.end());
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += ".";
    out += parts[i];
  }
  return out;
}

}  // namespace txbench::chem

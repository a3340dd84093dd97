#include "txbench/chem/molblock.hpp"

#include <cstdio>
#include <sstream>
#include <tuple>
#include <vector>

#include "txbench/common/text.hpp"

namespace txbench::chem {

namespace {

std::string fixed(const char* fmt, int a, int b = 0, int c = 0) {
  char buf[96];
  std::snprintf(buf, sizeof buf, fmt, a, b, c);
  return buf;
}

int field(std::string_view line, std::size_t pos, std::size_t len) {
  if (pos >= line.size()) return 0;
  std::string s(text::trim(line.substr(pos, len)));
  if (s.empty()) return 0;
  try {
    return std::stoi(s);
  } catch (const std::exception&) {
    throw MolBlockError("bad numeric field '" + s + "'");
  }
}

}  // namespace

std::string write_molblock(const MolecularGraph& graph, std::string_view title) {
  std::string out(title);
  out += "\n  txbench\n\n";
  out += fixed("%3d%3d  0  0  0  0  0  0  0  0999 V2000\n", graph.atom_count(), graph.bond_count());
  std::vector<std::string> charges, isotopes;
  for (int i = 0; i < graph.atom_count(); ++i) {
    const Atom& a = graph.atom(i);
    std::string sym(a.atomic_number == 0 ? "*" : element_symbol(a.atomic_number));
    char buf[128];
    std::snprintf(buf, sizeof buf, "    0.0000    0.0000    0.0000 %-3s 0  0  0%3d  0  0  0  0  0  0  0  0\n",
                  sym.c_str(), a.h_count + 1);
    out += buf;
    if (a.charge != 0) charges.push_back(fixed(" %3d %3d", i + 1, a.charge));
    if (a.isotope) isotopes.push_back(fixed(" %3d %3d", i + 1, *a.isotope));
  }
  for (const Bond& b : graph.bonds())
    out += fixed("%3d%3d%3d  0\n", b.a + 1, b.b + 1, static_cast<int>(b.order));
  auto props = [&](const char* tag, const std::vector<std::string>& items) {
    for (std::size_t i = 0; i < items.size(); i += 8) {
      const std::size_t n = std::min<std::size_t>(8, items.size() - i);
      out += std::string("M  ") + tag + fixed("%3d", static_cast<int>(n));
      for (std::size_t k = 0; k < n; ++k) out += items[i + k];
      out += "\n";
    }
  };
  props("CHG", charges);
  props("ISO", isotopes);
  out += "M  END\n";
  return out;
}

MolecularGraph parse_molblock(std::string_view block) {
  std::vector<std::string> lines;
  std::istringstream in{std::string(block)};
  for (std::string l; std::getline(in, l);) {
    if (!l.empty() && l.back() == '\r') l.pop_back();
    lines.push_back(l);
  }
  if (lines.size() < 4) throw MolBlockError("mol block shorter than its header");
  const std::string& counts = lines[3];
  if (counts.find("V2000") == std::string::npos) throw MolBlockError("only V2000 mol blocks are supported");
  const int n_atoms = field(counts, 0, 3);
  const int n_bonds = field(counts, 3, 3);
  if (n_atoms < 0 || n_bonds < 0 || lines.size() < 4u + n_atoms + n_bonds)
    throw MolBlockError("mol block truncated");

  MolecularGraph g;
  for (int i = 0; i < n_atoms; ++i) {
    const std::string& l = lines[4 + i];
    if (l.size() < 34) throw MolBlockError("short atom line " + std::to_string(i + 1));
    std::string sym(text::trim(std::string_view(l).substr(31, 3)));
    Atom a;
    if (sym == "*" || sym == "R#") {
      a.atomic_number = 0;
    } else {
      a.atomic_number = atomic_number(sym);
      if (a.atomic_number <= 0) throw MolBlockError("unknown element '" + sym + "'");
    }
    const int hfield = field(l, 42, 3);
    if (hfield > 0) {
      a.h_count = hfield - 1;
    } else {
      a.implicit_h = a.atomic_number != 0;
    }
    g.add_atom(a);
  }
  std::vector<bool> aromatic(static_cast<std::size_t>(n_atoms), false);
  std::vector<std::tuple<int, int, BondOrder>> bonds;
  for (int i = 0; i < n_bonds; ++i) {
    const std::string& l = lines[4 + n_atoms + i];
    const int a = field(l, 0, 3) - 1;
    const int b = field(l, 3, 3) - 1;
    const int t = field(l, 6, 3);
    if (a < 0 || b < 0 || a >= n_atoms || b >= n_atoms) throw MolBlockError("bond references a missing atom");
    if (t < 1 || t > 4) throw MolBlockError("unsupported bond type " + std::to_string(t));
    if (t == 4) aromatic[a] = aromatic[b] = true;
    bonds.emplace_back(a, b, static_cast<BondOrder>(t));
  }
  for (int i = 0; i < n_atoms; ++i) g.mutable_atom(i).aromatic = aromatic[i];
  for (auto [a, b, order] : bonds) {
    try {
      g.add_bond(a, b, order);
    } catch (const std::invalid_argument& e) {
      throw MolBlockError(e.what());
    }
  }
  for (std::size_t i = 4 + n_atoms + n_bonds; i < lines.size(); ++i) {
    const std::string& l = lines[i];
    if (l.rfind("M  END", 0) == 0) break;
    const bool chg = l.rfind("M  CHG", 0) == 0;
    if (!chg && l.rfind("M  ISO", 0) != 0) continue;
    const int n = field(l, 6, 3);
    for (int k = 0; k < n; ++k) {
      const int atom = field(l, 10 + 8 * k, 3) - 1;
      const int value = field(l, 14 + 8 * k, 3);
      if (atom < 0 || atom >= n_atoms) throw MolBlockError("property references a missing atom");
      if (chg) {
        g.mutable_atom(atom).charge = value;
      } else {
        g.mutable_atom(atom).isotope = value;
      }
    }
  }
  g.finalize();
  return g;
}

}  // namespace txbench::chem

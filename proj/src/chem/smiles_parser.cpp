#include <cctype>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "txbench/chem/smiles.hpp"

namespace txbench::chem {

std::string_view to_string(SmilesErrorKind kind) {
  switch (kind) {
    case SmilesErrorKind::kEmptyInput: return "EmptyInput";
    case SmilesErrorKind::kUnbalancedRingClosure: return "UnbalancedRingClosure";
    case SmilesErrorKind::kUnbalancedParenthesis: return "UnbalancedParenthesis";
    case SmilesErrorKind::kUnknownAtomSymbol: return "UnknownAtomSymbol";
    case SmilesErrorKind::kInvalidBondPlacement: return "InvalidBondPlacement";
  }
  return "?";
}

SmilesError::SmilesError(SmilesErrorKind kind, std::size_t offset, const std::string& detail)
    : std::runtime_error(std::string(to_string(kind)) + " at offset " + std::to_string(offset) +
                         ": " + detail),
      kind_(kind),
      offset_(offset) {}

namespace {

struct PendingBond {
  std::optional<BondOrder> order;
  std::size_t offset = 0;
  bool present = false;
};

struct OpenRing {
  int atom;
  std::optional<BondOrder> order;
  std::size_t offset;
};

class Parser {
 public:
  explicit Parser(std::string_view s) : s_(s) {}

  MolecularGraph run() {
    if (s_.empty()) fail(SmilesErrorKind::kEmptyInput, 0, "empty SMILES");
    while (pos_ < s_.size()) step();
    if (bond_.present) fail(SmilesErrorKind::kInvalidBondPlacement, bond_.offset, "dangling bond");
    if (!branches_.empty())
      fail(SmilesErrorKind::kUnbalancedParenthesis, branches_.back().offset, "unclosed branch");
    if (!rings_.empty()) {
      fail(SmilesErrorKind::kUnbalancedRingClosure, rings_.begin()->second.offset,
           "ring bond " + std::to_string(rings_.begin()->first) + " never closed");
    }
    if (prev_ < 0) fail(SmilesErrorKind::kInvalidBondPlacement, s_.size(), "no atom after '.'");
    g_.finalize();
    return std::move(g_);
  }

 private:
  struct Branch {
    int atom;
    std::size_t offset;
    int atoms_at_open;
  };

  [[noreturn]] void fail(SmilesErrorKind kind, std::size_t offset, const std::string& detail) {
    throw SmilesError(kind, offset, detail);
  }

  char peek(std::size_t ahead = 0) const {
    return pos_ + ahead < s_.size() ? s_[pos_ + ahead] : '\0';
  }

  void step() {
    const char c = peek();
    switch (c) {
      case '-': set_bond(BondOrder::kSingle); return;
      case '=': set_bond(BondOrder::kDouble); return;
      case '#': set_bond(BondOrder::kTriple); return;
      case ':': set_bond(BondOrder::kAromatic); return;
      case '/':
      case '\\': set_bond(BondOrder::kSingle); return;
      case '(': open_branch(); return;
      case ')': close_branch(); return;
      case '.': dot(); return;
      case '%': ring_closure_percent(); return;
      case '[': bracket_atom(); return;
      default: break;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      ring_closure(c - '0', pos_, 1);
      return;
    }
    organic_atom();
  }

  void set_bond(BondOrder order) {
    if (prev_ < 0 || bond_.present)
      fail(SmilesErrorKind::kInvalidBondPlacement, pos_, "bond symbol without preceding atom");
    bond_ = {order, pos_, true};
    ++pos_;
  }

  void open_branch() {
    if (prev_ < 0) fail(SmilesErrorKind::kUnbalancedParenthesis, pos_, "branch without atom");
    if (bond_.present)
      fail(SmilesErrorKind::kInvalidBondPlacement, bond_.offset, "bond before branch");
    branches_.push_back({prev_, pos_, g_.atom_count()});
    ++pos_;
  }

  void close_branch() {
    if (branches_.empty()) fail(SmilesErrorKind::kUnbalancedParenthesis, pos_, "unmatched ')'");
    if (bond_.present)
      fail(SmilesErrorKind::kInvalidBondPlacement, bond_.offset, "bond at end of branch");
    if (branches_.back().atoms_at_open == g_.atom_count())
      fail(SmilesErrorKind::kUnbalancedParenthesis, pos_, "empty branch");
    prev_ = branches_.back().atom;
    branches_.pop_back();
    ++pos_;
  }

  void dot() {
    if (prev_ < 0 || bond_.present)
      fail(SmilesErrorKind::kInvalidBondPlacement, pos_, "misplaced '.'");
    if (!branches_.empty())
      fail(SmilesErrorKind::kUnbalancedParenthesis, branches_.back().offset, "unclosed branch");
    prev_ = -1;
    ++pos_;
  }

  void ring_closure_percent() {
    if (!std::isdigit(static_cast<unsigned char>(peek(1))) ||
        !std::isdigit(static_cast<unsigned char>(peek(2))))
      fail(SmilesErrorKind::kUnbalancedRingClosure, pos_, "'%' must be followed by two digits");
    ring_closure((peek(1) - '0') * 10 + (peek(2) - '0'), pos_, 3);
  }

  void ring_closure(int number, std::size_t offset, std::size_t width) {
    if (prev_ < 0) fail(SmilesErrorKind::kInvalidBondPlacement, offset, "ring bond without atom");
    const std::optional<BondOrder> order =
        bond_.present ? bond_.order : std::optional<BondOrder>{};
    bond_ = {};
    auto it = rings_.find(number);
    if (it == rings_.end()) {
      rings_.emplace(number, OpenRing{prev_, order, offset});
    } else {
      const OpenRing open = it->second;
      rings_.erase(it);
      if (open.order && order && *open.order != *order)
        fail(SmilesErrorKind::kInvalidBondPlacement, offset, "conflicting ring bond orders");
      if (open.atom == prev_)
        fail(SmilesErrorKind::kInvalidBondPlacement, offset, "ring bond to the same atom");
      if (g_.find_bond(open.atom, prev_) >= 0)
        fail(SmilesErrorKind::kInvalidBondPlacement, offset, "duplicate bond from ring closure");
      BondOrder resolved = open.order ? *open.order : order ? *order : default_order(open.atom, prev_);
      g_.add_bond(open.atom, prev_, resolved);
    }
    pos_ += width;
  }

  BondOrder default_order(int a, int b) const {
    return g_.atom(a).aromatic && g_.atom(b).aromatic ? BondOrder::kAromatic : BondOrder::kSingle;
  }

  void attach(const Atom& atom) {
    const int idx = g_.add_atom(atom);
    if (prev_ >= 0) {
      const BondOrder order = bond_.present ? *bond_.order : default_order(prev_, idx);
      g_.add_bond(prev_, idx, order);
    }
    bond_ = {};
    prev_ = idx;
  }

  void organic_atom() {
    const std::size_t start = pos_;
    Atom atom;
    atom.implicit_h = true;
    const char c = peek();
    const char n = peek(1);
    if (c == 'C' && n == 'l') {
      atom.atomic_number = 17;
      pos_ += 2;
    } else if (c == 'B' && n == 'r') {
      atom.atomic_number = 35;
      pos_ += 2;
    } else {
      switch (c) {
        case 'B': atom.atomic_number = 5; break;
        case 'C': atom.atomic_number = 6; break;
        case 'N': atom.atomic_number = 7; break;
        case 'O': atom.atomic_number = 8; break;
        case 'P': atom.atomic_number = 15; break;
        case 'S': atom.atomic_number = 16; break;
        case 'F': atom.atomic_number = 9; break;
        case 'I': atom.atomic_number = 53; break;
        case 'b': atom.atomic_number = 5; atom.aromatic = true; break;
        case 'c': atom.atomic_number = 6; atom.aromatic = true; break;
        case 'n': atom.atomic_number = 7; atom.aromatic = true; break;
        case 'o': atom.atomic_number = 8; atom.aromatic = true; break;
        case 'p': atom.atomic_number = 15; atom.aromatic = true; break;
        case 's': atom.atomic_number = 16; atom.aromatic = true; break;
        case '*': atom.atomic_number = 0; atom.implicit_h = false; break;
        default:
          fail(SmilesErrorKind::kUnknownAtomSymbol, start,
               std::string("unexpected character '") + c + "'");
      }
      ++pos_;
    }
    attach(atom);
  }

  int read_int() {
    int v = 0;
    while (std::isdigit(static_cast<unsigned char>(peek()))) {
      v = v * 10 + (peek() - '0');
      ++pos_;
    }
    return v;
  }

  void bracket_atom() {
    const std::size_t open = pos_;
    ++pos_;
    Atom atom;
    if (std::isdigit(static_cast<unsigned char>(peek()))) atom.isotope = read_int();

    const std::size_t sym_start = pos_;
    const char c = peek();
    if (c == '*') {
      atom.atomic_number = 0;
      ++pos_;
    } else if (std::islower(static_cast<unsigned char>(c))) {
      // Aromatic symbols: two-letter forms first.
      static constexpr std::pair<std::string_view, int> kAromatic[] = {
          {"se", 34}, {"as", 33}, {"te", 52}, {"b", 5}, {"c", 6},
          {"n", 7},   {"o", 8},   {"p", 15},  {"s", 16}};
      bool found = false;
      for (const auto& [sym, z] : kAromatic) {
        if (s_.substr(pos_, sym.size()) == sym) {
          atom.atomic_number = z;
          atom.aromatic = true;
          pos_ += sym.size();
          found = true;
          break;
        }
      }
      if (!found) fail(SmilesErrorKind::kUnknownAtomSymbol, sym_start, "unknown aromatic symbol");
    } else if (std::isupper(static_cast<unsigned char>(c))) {
      int z = -1;
      if (std::islower(static_cast<unsigned char>(peek(1)))) {
        z = atomic_number(s_.substr(pos_, 2));
        if (z >= 0) pos_ += 2;
      }
      if (z < 0) {
        z = atomic_number(s_.substr(pos_, 1));
        if (z < 0) fail(SmilesErrorKind::kUnknownAtomSymbol, sym_start, "unknown element");
        ++pos_;
      }
      atom.atomic_number = z;
    } else {
      fail(SmilesErrorKind::kUnknownAtomSymbol, sym_start, "missing element symbol");
    }

    // Chirality is accepted and discarded.
    if (peek() == '@') {
      while (peek() == '@') ++pos_;
      if (std::isupper(static_cast<unsigned char>(peek())) &&
          std::isupper(static_cast<unsigned char>(peek(1)))) {
        pos_ += 2;
        read_int();
      }
    }
    if (peek() == 'H') {
      ++pos_;
      atom.h_count = std::isdigit(static_cast<unsigned char>(peek())) ? read_int() : 1;
    }
    if (peek() == '+' || peek() == '-') {
      const char sign = peek();
      const int unit = sign == '+' ? 1 : -1;
      ++pos_;
      if (std::isdigit(static_cast<unsigned char>(peek()))) {
        atom.charge = unit * read_int();
      } else {
        int magnitude = 1;
        while (peek() == sign) {
          ++magnitude;
          ++pos_;
        }
        atom.charge = unit * magnitude;
      }
    }
    if (peek() == ':') {
      ++pos_;
      if (!std::isdigit(static_cast<unsigned char>(peek())))
        fail(SmilesErrorKind::kUnknownAtomSymbol, pos_, "atom class must be numeric");
      atom.atom_class = read_int();
    }
    if (peek() != ']') {
      fail(SmilesErrorKind::kUnknownAtomSymbol, pos_ < s_.size() ? pos_ : open,
           "malformed bracket atom");
    }
    ++pos_;
    attach(atom);
  }

  std::string_view s_;
  std::size_t pos_ = 0;
  MolecularGraph g_;
  int prev_ = -1;
  PendingBond bond_;
  std::vector<Branch> branches_;
  std::map<int, OpenRing> rings_;
};

}  // namespace

MolecularGraph parse_smiles(std::string_view smiles) { return Parser(smiles).run(); }

}  // namespace txbench::chem

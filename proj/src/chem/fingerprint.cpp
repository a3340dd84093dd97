#include "txbench/chem/fingerprint.hpp"

#include <algorithm>
#include <bit>
#include <string>

#include "txbench/common/hashing.hpp"

namespace txbench::chem {

void FingerprintParams::validate() const {
  if (radius < 0) throw std::invalid_argument("fingerprint radius must be >= 0");
  if (n_bits <= 0 || !std::has_single_bit(static_cast<unsigned>(n_bits)))
    throw std::invalid_argument("fingerprint width must be a positive power of two");
}

WidthMismatch::WidthMismatch(int a, int b)
    : std::invalid_argument("fingerprint width mismatch: " + std::to_string(a) + " vs " +
                            std::to_string(b)) {}

Fingerprint::Fingerprint(int n_bits)
    : n_bits_(n_bits), words_(static_cast<std::size_t>((n_bits + 63) / 64), 0) {}

bool Fingerprint::test(int bit) const {
  if (bit < 0 || bit >= n_bits_) throw std::out_of_range("fingerprint bit out of range");
  return (words_[static_cast<std::size_t>(bit / 64)] >> (bit % 64)) & 1U;
}

void Fingerprint::set(int bit) {
  if (bit < 0 || bit >= n_bits_) throw std::out_of_range("fingerprint bit out of range");
  auto& w = words_[static_cast<std::size_t>(bit / 64)];
  const std::uint64_t mask = std::uint64_t{1} << (bit % 64);
  if ((w & mask) == 0) {
    w |= mask;
    ++popcount_;
  }
}

std::string Fingerprint::to_hex() const {
  static constexpr char kDigits[] = "0123456789abcdef";
  const int n_bytes = (n_bits_ + 7) / 8;
  std::string out;
  out.reserve(static_cast<std::size_t>(n_bytes) * 2);
  for (int i = 0; i < n_bytes; ++i) {
    const auto byte = static_cast<unsigned>(
        (words_[static_cast<std::size_t>(i / 8)] >> ((i % 8) * 8)) & 0xFFU);
    out.push_back(kDigits[byte >> 4]);
    out.push_back(kDigits[byte & 0xF]);
  }
  return out;
}

Fingerprint Fingerprint::from_hex(std::string_view hex) {
  if (hex.size() % 2 != 0) throw std::invalid_argument("odd-length fingerprint hex");
  auto nibble = [](char c) -> unsigned {
    if (c >= '0' && c <= '9') return static_cast<unsigned>(c - '0');
    if (c >= 'a' && c <= 'f') return static_cast<unsigned>(c - 'a' + 10);
    if (c >= 'A' && c <= 'F') return static_cast<unsigned>(c - 'A' + 10);
    throw std::invalid_argument("invalid hex digit in fingerprint");
  };
  Fingerprint fp(static_cast<int>(hex.size() * 4));
  for (std::size_t i = 0; i < hex.size() / 2; ++i) {
    const std::uint64_t byte = (nibble(hex[2 * i]) << 4) | nibble(hex[2 * i + 1]);
    fp.words_[i / 8] |= byte << ((i % 8) * 8);
  }
  for (auto w : fp.words_) fp.popcount_ += std::popcount(w);
  return fp;
}

namespace {

std::uint64_t bond_code(BondOrder order) { return static_cast<std::uint64_t>(order); }

}  // namespace

Fingerprint morgan_fingerprint(const MolecularGraph& g, const FingerprintParams& params) {
  params.validate();
  Fingerprint fp(params.n_bits);
  const auto n = static_cast<std::size_t>(g.atom_count());
  std::vector<std::uint64_t> ids(n), next(n);
  const auto mask = static_cast<std::uint64_t>(params.n_bits - 1);

  for (std::size_t i = 0; i < n; ++i) {
    const auto& a = g.atom(static_cast<int>(i));
    std::uint64_t h = mix64(0x6d6f7267616eULL);  // "morgan"
    h = hash_combine(h, static_cast<std::uint64_t>(a.atomic_number));
    h = hash_combine(h, static_cast<std::uint64_t>(static_cast<std::int64_t>(a.charge)));
    h = hash_combine(h, a.aromatic ? 1U : 0U);
    h = hash_combine(h, static_cast<std::uint64_t>(a.h_count));
    h = hash_combine(h, g.neighbors(static_cast<int>(i)).size());
    h = hash_combine(h, g.in_ring(static_cast<int>(i)) ? 1U : 0U);
    ids[i] = h;
    fp.set(static_cast<int>(h & mask));
  }

  std::vector<std::pair<std::uint64_t, std::uint64_t>> env;
  for (int r = 1; r <= params.radius; ++r) {
    for (std::size_t i = 0; i < n; ++i) {
      env.clear();
      for (const auto& nb : g.neighbors(static_cast<int>(i))) {
        env.emplace_back(bond_code(g.bond(nb.bond).order), ids[static_cast<std::size_t>(nb.atom)]);
      }
      std::sort(env.begin(), env.end());
      std::uint64_t h = hash_combine(static_cast<std::uint64_t>(r), ids[i]);
      for (const auto& [bo, id] : env) {
        h = hash_combine(h, bo);
        h = hash_combine(h, id);
      }
      next[i] = h;
      fp.set(static_cast<int>(h & mask));
    }
    ids.swap(next);
  }
  return fp;
}

int and_popcount(const std::uint64_t* a, const std::uint64_t* b, std::size_t words) {
  int c = 0;
  for (std::size_t i = 0; i < words; ++i) c += std::popcount(a[i] & b[i]);
  return c;
}

double tanimoto(const Fingerprint& a, const Fingerprint& b) {
  if (a.n_bits() != b.n_bits()) throw WidthMismatch(a.n_bits(), b.n_bits());
  const int both = and_popcount(a.words().data(), b.words().data(), a.words().size());
  const int either = a.popcount() + b.popcount() - both;
  if (either == 0) return 1.0;
  return static_cast<double>(both) / static_cast<double>(either);
}

}  // namespace txbench::chem

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "txbench/chem/molecule.hpp"

namespace txbench::chem {

struct FingerprintParams {
  int radius = 2;
  int n_bits = 2048;

  void validate() const;
};

class WidthMismatch : public std::invalid_argument {
 public:
  WidthMismatch(int a, int b);
};

class Fingerprint {
 public:
  Fingerprint() = default;
  explicit Fingerprint(int n_bits);

  int n_bits() const { return n_bits_; }
  int popcount() const { return popcount_; }
  bool test(int bit) const;
  void set(int bit);

  const std::vector<std::uint64_t>& words() const { return words_; }

  // Byte i (two hex digits) holds bits 8i..8i+7, least significant first.
  std::string to_hex() const;
  static Fingerprint from_hex(std::string_view hex);

  friend bool operator==(const Fingerprint&, const Fingerprint&) = default;

 private:
  int n_bits_ = 0;
  int popcount_ = 0;
  std::vector<std::uint64_t> words_;
};

// Circular (Morgan) fingerprint. Atom identifiers start from the invariant
// tuple (element, charge, aromatic, H count, heavy degree, ring flag) and are
// updated `radius` times from the sorted (bond order, neighbor id) pairs.
// Every identifier from iterations 0..radius sets bit id % n_bits.
//
// Hash: hash_combine/mix64 from common/hashing.hpp (SplitMix64 finalizer).
Fingerprint morgan_fingerprint(const MolecularGraph& graph, const FingerprintParams& params = {});

// |a & b| / |a | b|; 1.0 when both are empty.
double tanimoto(const Fingerprint& a, const Fingerprint& b);

// Intersection popcount over raw words; the inner loop of bulk scans.
int and_popcount(const std::uint64_t* a, const std::uint64_t* b, std::size_t words);

}  // namespace txbench::chem

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace txbench::seqalign {

enum class SequenceKind { kAminoAcid, kNucleotide };

class SequenceError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class KindMismatch : public SequenceError {
 public:
  KindMismatch() : SequenceError("sequences have different kinds") {}
};

class EmptySequence : public SequenceError {
 public:
  EmptySequence() : SequenceError("empty sequence") {}
};

class InvalidResidue : public SequenceError {
 public:
  InvalidResidue(char residue, std::size_t offset);
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

struct BioSequence {
  SequenceKind kind = SequenceKind::kAminoAcid;
  std::string residues;
};

// Uppercases and validates. Amino acids: the 20 standard letters plus X.
// Nucleotides: A, C, G, T, U, N.
BioSequence make_sequence(SequenceKind kind, std::string_view text);

struct ScoreScheme {
  int match = 1;
  int mismatch = 0;
  int gap = -1;
};

struct AlignmentResult {
  std::string aligned_a;
  std::string aligned_b;
  int score = 0;
  int matches = 0;
  int alignment_length = 0;
  double identity = 0.0;
};

// Sequences longer than this use the banded path.
inline constexpr std::size_t kBandThreshold = 2000;

// Needleman-Wunsch with a linear gap penalty. Among optimal-score alignments
// the one with the most matches is kept; remaining ties go diagonal, then up
// (gap in b), then left (gap in a).
AlignmentResult global_align(const BioSequence& a, const BioSequence& b, const ScoreScheme& scores = {});

// Full O(nm) DP regardless of length.
AlignmentResult global_align_full(const BioSequence& a, const BioSequence& b, const ScoreScheme& scores = {});

// Banded DP with half-width max(32, |la-lb|+16). Returns false in `exact` when
// the traceback touched the band edge, in which case the result may not be optimal.
AlignmentResult global_align_banded(const BioSequence& a, const BioSequence& b, const ScoreScheme& scores,
                                    bool& exact);

// Matches over alignment length, including gap columns.
double percent_identity(const BioSequence& a, const BioSequence& b);

}  // namespace txbench::seqalign

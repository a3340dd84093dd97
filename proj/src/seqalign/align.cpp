#include "txbench/seqalign/align.hpp"

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <string>
#include <vector>

namespace txbench::seqalign {

namespace {

constexpr std::string_view kAminoAcids = "ACDEFGHIKLMNPQRSTVWYX";
constexpr std::string_view kNucleotides = "ACGTUN";

constexpr std::uint8_t kDiag = 1;
constexpr std::uint8_t kUp = 2;
constexpr std::uint8_t kLeft = 4;
constexpr int kNegInf = std::numeric_limits<int>::min() / 4;

void check_pair(const BioSequence& a, const BioSequence& b) {
  if (a.kind != b.kind) throw KindMismatch();
  if (a.residues.empty() || b.residues.empty()) throw EmptySequence();
}

// DP value: alignment score, then match count among equal scores. Ranking
// equal-score alignments by matches makes identity independent of argument order.
struct Cell {
  int score = kNegInf;
  int matches = 0;

  friend bool operator==(const Cell&, const Cell&) = default;
  friend auto operator<=>(const Cell& x, const Cell& y) {
    if (auto c = x.score <=> y.score; c != 0) return c;
    return x.matches <=> y.matches;
  }
};

Cell step(const Cell& from, int delta, int matched) {
  if (from.score == kNegInf) return from;
  return {from.score + delta, from.matches + matched};
}

std::uint8_t best_moves(const Cell& diag, const Cell& up, const Cell& left, Cell& best) {
  best = std::max({diag, up, left});
  std::uint8_t moves = 0;
  if (diag == best) moves |= kDiag;
  if (up == best) moves |= kUp;
  if (left == best) moves |= kLeft;
  return moves;
}

// Walks back from (la, lb) using `moves(i, j)` and assembles the result.
template <typename MovesAt, typename OnCell>
AlignmentResult trace(const std::string& a, const std::string& b, int score, MovesAt moves_at, OnCell on_cell) {
  std::size_t i = a.size();
  std::size_t j = b.size();
  std::string ra;
  std::string rb;
  ra.reserve(a.size() + b.size());
  rb.reserve(a.size() + b.size());
  int matches = 0;
  while (i > 0 || j > 0) {
    on_cell(i, j);
    std::uint8_t m = moves_at(i, j);
    if ((m & kDiag) && i > 0 && j > 0) {
      --i;
      --j;
      ra.push_back(a[i]);
      rb.push_back(b[j]);
      if (a[i] == b[j]) ++matches;
    } else if ((m & kUp) && i > 0) {
      --i;
      ra.push_back(a[i]);
      rb.push_back('-');
    } else {
      --j;
      ra.push_back('-');
      rb.push_back(b[j]);
    }
  }
  std::reverse(ra.begin(), ra.end());
  std::reverse(rb.begin(), rb.end());
  AlignmentResult r;
  r.alignment_length = static_cast<int>(ra.size());
  r.aligned_a = std::move(ra);
  r.aligned_b = std::move(rb);
  r.score = score;
  r.matches = matches;
  r.identity = static_cast<double>(matches) / r.alignment_length;
  return r;
}

}  // namespace

InvalidResidue::InvalidResidue(char residue, std::size_t offset)
    : SequenceError(std::string("invalid residue '") + residue + "' at offset " + std::to_string(offset)),
      offset_(offset) {}

BioSequence make_sequence(SequenceKind kind, std::string_view text) {
  if (text.empty()) throw EmptySequence();
  const std::string_view alphabet = kind == SequenceKind::kAminoAcid ? kAminoAcids : kNucleotides;
  BioSequence seq{kind, {}};
  seq.residues.reserve(text.size());
  for (std::size_t k = 0; k < text.size(); ++k) {
    char c = static_cast<char>(std::toupper(static_cast<unsigned char>(text[k])));
    if (alphabet.find(c) == std::string_view::npos) throw InvalidResidue(text[k], k);
    seq.residues.push_back(c);
  }
  return seq;
}

AlignmentResult global_align_full(const BioSequence& sa, const BioSequence& sb, const ScoreScheme& s) {
  check_pair(sa, sb);
  const std::string& a = sa.residues;
  const std::string& b = sb.residues;
  const std::size_t la = a.size();
  const std::size_t lb = b.size();
  const std::size_t stride = lb + 1;
  std::vector<std::uint8_t> moves((la + 1) * stride, 0);
  std::vector<Cell> prev(lb + 1);
  std::vector<Cell> cur(lb + 1);
  for (std::size_t j = 0; j <= lb; ++j) {
    prev[j] = {static_cast<int>(j) * s.gap, 0};
    if (j > 0) moves[j] = kLeft;
  }
  for (std::size_t i = 1; i <= la; ++i) {
    cur[0] = {static_cast<int>(i) * s.gap, 0};
    moves[i * stride] = kUp;
    for (std::size_t j = 1; j <= lb; ++j) {
      const bool eq = a[i - 1] == b[j - 1];
      moves[i * stride + j] = best_moves(step(prev[j - 1], eq ? s.match : s.mismatch, eq ? 1 : 0),
                                         step(prev[j], s.gap, 0), step(cur[j - 1], s.gap, 0), cur[j]);
    }
    std::swap(prev, cur);
  }
  return trace(
      a, b, prev[lb].score, [&](std::size_t i, std::size_t j) { return moves[i * stride + j]; },
      [](std::size_t, std::size_t) {});
}

AlignmentResult global_align_banded(const BioSequence& sa, const BioSequence& sb, const ScoreScheme& s,
                                    bool& exact) {
  check_pair(sa, sb);
  const std::string& a = sa.residues;
  const std::string& b = sb.residues;
  const long la = static_cast<long>(a.size());
  const long lb = static_cast<long>(b.size());
  const long w = std::max(32L, std::labs(la - lb) + 16);
  const long width = 2 * w + 1;
  // Cell (i, j) lives at row i, column j - i + w.
  auto in_band = [&](long i, long j) { return j >= 0 && j <= lb && std::labs(j - i) <= w; };
  std::vector<std::uint8_t> moves(static_cast<std::size_t>((la + 1) * width), 0);
  std::vector<Cell> prev(static_cast<std::size_t>(width));
  std::vector<Cell> cur(static_cast<std::size_t>(width));
  auto at = [&](std::vector<Cell>& row, long i, long j) -> Cell& {
    return row[static_cast<std::size_t>(j - i + w)];
  };
  for (long j = 0; j <= std::min(lb, w); ++j) {
    at(prev, 0, j) = {static_cast<int>(j) * s.gap, 0};
    if (j > 0) moves[static_cast<std::size_t>(j + w)] = kLeft;
  }
  for (long i = 1; i <= la; ++i) {
    std::fill(cur.begin(), cur.end(), Cell{});
    for (long j = std::max(0L, i - w); j <= std::min(lb, i + w); ++j) {
      std::size_t cell = static_cast<std::size_t>(i * width + (j - i + w));
      if (j == 0) {
        at(cur, i, 0) = {static_cast<int>(i) * s.gap, 0};
        moves[cell] = kUp;
        continue;
      }
      const bool eq = a[i - 1] == b[j - 1];
      Cell diag = in_band(i - 1, j - 1) ? step(at(prev, i - 1, j - 1), eq ? s.match : s.mismatch, eq ? 1 : 0)
                                        : Cell{};
      Cell up = in_band(i - 1, j) ? step(at(prev, i - 1, j), s.gap, 0) : Cell{};
      Cell left = in_band(i, j - 1) ? step(at(cur, i, j - 1), s.gap, 0) : Cell{};
      moves[cell] = best_moves(diag, up, left, at(cur, i, j));
    }
    std::swap(prev, cur);
  }
  exact = true;
  return trace(
      a, b, at(prev, la, lb).score,
      [&](std::size_t i, std::size_t j) {
        long li = static_cast<long>(i);
        long lj = static_cast<long>(j);
        return moves[static_cast<std::size_t>(li * width + (lj - li + w))];
      },
      [&](std::size_t i, std::size_t j) {
        if (std::labs(static_cast<long>(j) - static_cast<long>(i)) >= w) exact = false;
      });
}

AlignmentResult global_align(const BioSequence& a, const BioSequence& b, const ScoreScheme& scores) {
  check_pair(a, b);
  if (a.residues.size() <= kBandThreshold && b.residues.size() <= kBandThreshold)
    return global_align_full(a, b, scores);
  bool exact = false;
  AlignmentResult r = global_align_banded(a, b, scores, exact);
  if (exact) return r;
  return global_align_full(a, b, scores);
}

double percent_identity(const BioSequence& a, const BioSequence& b) { return global_align(a, b).identity; }

}  // namespace txbench::seqalign

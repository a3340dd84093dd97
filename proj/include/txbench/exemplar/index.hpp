#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "txbench/chem/fingerprint.hpp"
#include "txbench/seqalign/align.hpp"
#include "txbench/taskdata/task.hpp"

namespace txbench::exemplar {

class EmptyPool : public std::invalid_argument {
 public:
  EmptyPool() : std::invalid_argument("exemplar pool is empty") {}
};

class IndexFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Normalized exact-match key: used for text features and as the fallback for
// unparseable SMILES or invalid sequences.
struct ExactKey {
  std::string text;
};

using FeatureKey = std::variant<chem::Fingerprint, seqalign::BioSequence, ExactKey>;

struct Neighbor {
  std::size_t point_index = 0;
  double similarity = 0.0;
  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

struct IndexOptions {
  chem::FingerprintParams fingerprint;
  // Per-feature weights for the combined similarity; empty means equal weights.
  std::vector<double> weights;
};

struct QueryOptions {
  // Skip pool points whose feature values all equal the query's.
  bool exclude_self = false;
};

// Key for one feature value; fills `diagnostic` when falling back to ExactKey.
FeatureKey make_key(taskdata::FeatureKind kind, const std::string& value, const chem::FingerprintParams& params,
                    std::string* diagnostic = nullptr);

// Similarity in [0, 1] between two keys of the same feature slot. Keys of
// different types (one fell back to ExactKey) compare by their source strings.
double key_similarity(const FeatureKey& a, const FeatureKey& b);

class ExemplarIndex {
 public:
  // Throws EmptyPool, or taskdata::SchemaMismatch for points that do not fit the spec.
  static ExemplarIndex build(const taskdata::TaskSpec& task, std::vector<taskdata::DataPoint> pool,
                             const IndexOptions& options = {});

  const taskdata::TaskSpec& task() const { return task_; }
  const std::vector<taskdata::DataPoint>& pool() const { return pool_; }
  std::size_t size() const { return pool_.size(); }
  const std::vector<std::string>& diagnostics() const { return diagnostics_; }
  const IndexOptions& options() const { return options_; }
  const std::vector<FeatureKey>& keys(std::size_t point) const { return keys_[point]; }

  // Combined similarity of a query (already keyed) to pool point i.
  double similarity(const std::vector<FeatureKey>& query_keys, std::size_t i) const;
  std::vector<FeatureKey> keys_for(const taskdata::DataPoint& query) const;

  // Sorted by similarity descending, ties by ascending point index.
  // Throws taskdata::SchemaMismatch when the query does not fit the task.
  std::vector<Neighbor> query_knn(const taskdata::DataPoint& query, std::size_t k,
                                  const QueryOptions& options = {}) const;

  // TXIX1 binary format.
  std::string serialize() const;
  static ExemplarIndex deserialize(std::string_view bytes);
  void save(const std::filesystem::path& path) const;
  static ExemplarIndex load(const std::filesystem::path& path);

 private:
  std::vector<Neighbor> scan_single_fingerprint(const chem::Fingerprint& q, std::size_t k,
                                                const taskdata::DataPoint& query, bool exclude_self) const;

  taskdata::TaskSpec task_;
  IndexOptions options_;
  std::vector<taskdata::DataPoint> pool_;
  std::vector<std::vector<FeatureKey>> keys_;
  std::vector<std::string> diagnostics_;
  // Contiguous fingerprint words and popcounts for single-SMILES tasks;
  // empty otherwise. -1 popcount marks a point whose key fell back.
  std::size_t words_per_fp_ = 0;
  std::vector<std::uint64_t> fp_words_;
  std::vector<int> fp_popcounts_;
};

// Pool for evaluation: train plus validation points, in file order.
std::vector<taskdata::DataPoint> eval_pool(const taskdata::DatasetBundle& bundle);

}  // namespace txbench::exemplar

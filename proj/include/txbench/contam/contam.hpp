#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include "txbench/evalrunner/eval.hpp"

namespace txbench::contam {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class AllFlagged : public std::runtime_error {
 public:
  AllFlagged() : std::runtime_error("every test point is flagged") {}
};

// Whitespace runs collapse to one space and the ends are trimmed; case is kept.
std::string normalize_snippet(std::string_view s);

class CorpusIndex {
 public:
  // One snippet per non-empty line of each file.
  static CorpusIndex build(const std::vector<std::filesystem::path>& corpus_paths);
  static CorpusIndex from_snippets(const std::vector<std::string>& snippets);

  void add(std::string_view snippet);
  bool contains(std::string_view feature) const;
  std::size_t size() const { return entries_.size(); }

 private:
  std::unordered_set<std::string> entries_;
};

// Test-split points with at least one feature in the corpus, ascending.
std::vector<std::size_t> flag_contaminated(const taskdata::DatasetBundle& bundle, const CorpusIndex& index);

struct ContaminationReport {
  std::string task_id;
  std::vector<std::size_t> flagged;
  double fraction = 0.0;
  metrics::MetricReport report_full;
  metrics::MetricReport report_filtered;

  Json to_json() const;
};

// Both reports are bootstrapped with the same options; the filtered one drops
// records whose point index is flagged.
ContaminationReport filtered_report(const eval::EvalRun& run, const std::vector<std::size_t>& flagged,
                                    metrics::MetricId metric, const metrics::BootstrapOptions& options = {});

}  // namespace txbench::contam

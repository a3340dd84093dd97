#include "txbench/contam/contam.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "txbench/common/text.hpp"

namespace txbench::contam {

std::string normalize_snippet(std::string_view s) { return text::collapse_whitespace(s); }

CorpusIndex CorpusIndex::build(const std::vector<std::filesystem::path>& corpus_paths) {
  CorpusIndex idx;
  for (const auto& path : corpus_paths) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read corpus file " + path.string());
    for (std::string line; std::getline(in, line);) idx.add(line);
    if (in.bad()) throw IoError("error reading " + path.string());
  }
  return idx;
}

CorpusIndex CorpusIndex::from_snippets(const std::vector<std::string>& snippets) {
  CorpusIndex idx;
  for (const auto& s : snippets) idx.add(s);
  return idx;
}

void CorpusIndex::add(std::string_view snippet) {
  std::string n = normalize_snippet(snippet);
  if (!n.empty()) entries_.insert(std::move(n));
}

bool CorpusIndex::contains(std::string_view feature) const { return entries_.count(normalize_snippet(feature)) > 0; }

std::vector<std::size_t> flag_contaminated(const taskdata::DatasetBundle& bundle, const CorpusIndex& index) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < bundle.points.size(); ++i) {
    const auto& p = bundle.points[i];
    if (p.split != taskdata::Split::kTest) continue;
    if (std::any_of(p.features.begin(), p.features.end(), [&](const auto& f) { return index.contains(f.value); }))
      out.push_back(i);
  }
  return out;
}

Json ContaminationReport::to_json() const {
  return Json{{"task_id", task_id},
              {"flagged", flagged},
              {"fraction", fraction},
              {"report_full", report_full.to_json()},
              {"report_filtered", report_filtered.to_json()}};
}

ContaminationReport filtered_report(const eval::EvalRun& run, const std::vector<std::size_t>& flagged,
                                    metrics::MetricId metric, const metrics::BootstrapOptions& options) {
  const std::set<std::size_t> drop(flagged.begin(), flagged.end());
  std::vector<metrics::PredictionRecord> all, kept;
  ContaminationReport rep;
  rep.task_id = run.task_id;
  for (const auto& p : run.points) {
    all.push_back(p.record);
    if (drop.count(p.point_index)) rep.flagged.push_back(p.point_index);
    else kept.push_back(p.record);
  }
  if (all.empty()) throw std::invalid_argument("run has no records");
  if (kept.empty()) throw AllFlagged();
  rep.fraction = static_cast<double>(rep.flagged.size()) / static_cast<double>(all.size());
  rep.report_full = metrics::bootstrap(all, metric, options);
  rep.report_filtered = metrics::bootstrap(kept, metric, options);
  return rep;
}

}  // namespace txbench::contam

// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.
// Run with a criterion name (or a substring of one) to run only that criterion.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "support/oracles.hpp"
#include "txbench/agent/agent.hpp"
#include "txbench/agent/scripted.hpp"
#include "txbench/chem/fingerprint.hpp"
#include "txbench/chem/smiles.hpp"
#include "txbench/contam/contam.hpp"
#include "txbench/evalrunner/eval.hpp"
#include "txbench/exemplar/index.hpp"
#include "txbench/metrics/metrics.hpp"
#include "txbench/promptgen/prompt.hpp"
#include "txbench/seqalign/align.hpp"
#include "txbench/taskdata/task.hpp"

namespace {

namespace fs = std::filesystem;
using namespace txbench;
using Clock = std::chrono::steady_clock;

const fs::path kFixtures = TXBENCH_FIXTURES_DIR;
const fs::path kTables = kFixtures / "reference_tables";

// Collects failed checks and a few measured values for the report line.
class Check {
 public:
  void expect(bool ok, const std::string& what) {
    if (!ok) failures_.push_back(what);
  }
  void note(const std::string& s) { notes_.push_back(s); }
  bool ok() const { return failures_.empty(); }
  std::string summary() const {
    std::string out;
    for (const auto& n : notes_) out += (out.empty() ? "" : "; ") + n;
    for (const auto& f : failures_) out += (out.empty() ? "" : "; ") + std::string("FAILED ") + f;
    return out;
  }

 private:
  std::vector<std::string> failures_;
  std::vector<std::string> notes_;
};

std::string fmt(const char* f, double v) {
  char buf[96];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

eval::ModelTable column(const std::string& name) { return eval::load_table_column(kTables / "tdc_results.tsv", name); }

taskdata::TaskSpec smiles_task() {
  taskdata::TaskSpec t;
  t.task_id = "generated";
  t.kind = taskdata::TaskKind::kBinary;
  t.feature_schema = {taskdata::FeatureKind::kSmiles};
  t.question_template = "Drug SMILES: {feature_1}";
  return t;
}

taskdata::DataPoint mol(const std::string& smiles) {
  return {{{taskdata::FeatureKind::kSmiles, smiles}}, true, taskdata::Split::kTrain};
}

// ---- criteria

void reference_tables(Check& c) {
  const auto t0 = Clock::now();
  const auto predict = column("txgemma_27b_predict");
  const auto m = eval::compare_models(predict, column("txllm_m"));
  const auto s = eval::compare_models(predict, column("txllm_s"));
  const double runtime = seconds_since(t0);
  c.note("vs Tx-LLM M " + std::to_string(m.wins_a) + "/" + std::to_string(m.wins_b) + "/" + std::to_string(m.ties));
  c.note("vs Tx-LLM S " + std::to_string(s.wins_a) + "/" + std::to_string(s.wins_b) + "/" + std::to_string(s.ties));
  c.expect(m.wins_a == 45 && m.wins_b == 21, "vs Tx-LLM M wins/losses want 45/21");
  c.expect(s.wins_a == 62 && s.wins_b == 4, "vs Tx-LLM S wins/losses want 62/4");
  c.expect(m.wilcoxon.has_value(), "Wilcoxon result missing");
  if (m.wilcoxon) {
    c.note("Wilcoxon p=" + fmt("%.6f", m.wilcoxon->p_value));
    c.expect(m.wilcoxon->p_value >= 0.001 && m.wilcoxon->p_value <= 0.01, "Wilcoxon p outside [0.001, 0.01]");
  }
  c.note("runtime " + fmt("%.3fs", runtime));
  c.expect(runtime < 1.0, "runtime >= 1s");
}

void chat_medians(Check& c) {
  const auto t0 = Clock::now();
  const auto chat = column("txgemma_27b_chat");
  const auto vs_predict = eval::compare_models(chat, column("txgemma_27b_predict"));
  const auto vs_gemma = eval::compare_models(chat, column("gemma2_27b"));
  const double runtime = seconds_since(t0);
  auto within = [](const eval::ComparisonReport& r, double target) {
    return std::abs(100 * r.median_relative_change - target) <= 2.0 ||
           std::abs(100 * r.median_relative_change_mean - target) <= 2.0;
  };
  c.note("chat vs predict " + fmt("%.2f%%", 100 * vs_predict.median_relative_change) + " (pair-mean baseline " +
         fmt("%.2f%%)", 100 * vs_predict.median_relative_change_mean));
  c.note("chat vs Gemma-2 " + fmt("%.2f%%", 100 * vs_gemma.median_relative_change) + " (pair-mean baseline " +
         fmt("%.2f%%)", 100 * vs_gemma.median_relative_change_mean));
  c.expect(within(vs_predict, -10.69), "chat vs predict median not within 2 pp of -10.69%");
  c.expect(within(vs_gemma, 29.67), "chat vs Gemma-2 median not within 2 pp of +29.67%");
  c.expect(runtime < 1.0, "runtime >= 1s");
}

void specialist(Check& c) {
  const auto r = eval::compare_models(column("txgemma_27b_predict"), column("specialist_sota"));
  c.note("near=" + std::to_string(r.near_count) + " wins=" + std::to_string(r.wins_a) +
         " compared=" + std::to_string(r.per_task.size()) +
         " without SOTA=" + std::to_string(r.unavailable.size()));
  c.expect(r.near_count == 50, "near-SOTA count want 50");
  c.expect(r.wins_a == 26, "strict wins want 26");
}

void split_validation(Check& c) {
  const auto cat = taskdata::TaskCatalog::load(kFixtures / "tasks.json");
  int matched = 0;
  for (const auto& spec : cat.tasks()) {
    if (!spec.expected_counts) continue;
    const auto bundle = cat.load_bundle(spec.task_id);
    const bool ok = taskdata::validate_counts(bundle, *spec.expected_counts).mismatches.empty();
    c.expect(ok, spec.task_id + " split counts differ");
    matched += ok;
  }
  const auto ames = cat.load_bundle("ames");
  c.expect(ames.counts.train == 5093 && ames.counts.validation == 728 && ames.counts.test == 1457,
           "AMES counts want 5093/728/1457");
  c.note(std::to_string(matched) + " tasks match");
  c.expect(matched >= 5, "fewer than 5 tasks checked");
}

void metric_oracles(Check& c) {
  std::mt19937_64 rng(2024);
  // AUROC against pair counting.
  int datasets = 0, auroc_bad = 0;
  std::uniform_int_distribution<int> size(2, 10), level(0, 5);
  std::bernoulli_distribution coin(0.5);
  while (datasets < 200) {
    const int n = size(rng);
    std::vector<bool> y;
    std::vector<double> s;
    for (int i = 0; i < n; ++i) {
      y.push_back(coin(rng));
      s.push_back(level(rng) / 5.0);
    }
    const auto pos = std::count(y.begin(), y.end(), true);
    if (pos == 0 || pos == n) continue;
    ++datasets;
    std::unique_ptr<bool[]> yb(new bool[static_cast<std::size_t>(n)]);
    for (int i = 0; i < n; ++i) yb[static_cast<std::size_t>(i)] = y[static_cast<std::size_t>(i)];
    const double got = metrics::auroc(std::span<const bool>(yb.get(), static_cast<std::size_t>(n)), s);
    auroc_bad += got != oracle::pair_auroc(y, s);
  }
  c.note("AUROC " + std::to_string(datasets - auroc_bad) + "/" + std::to_string(datasets) + " exact");
  c.expect(auroc_bad == 0, "AUROC differs from pair counting");

  // Spearman against Pearson on counted ranks.
  double spearman_gap = 0;
  std::uniform_int_distribution<int> v(0, 7);
  for (int t = 0; t < 500; ++t) {
    std::vector<double> x, y;
    for (int i = 0; i < 15; ++i) {
      x.push_back(v(rng));
      y.push_back(v(rng) + 0.5 * x.back());
    }
    const auto rx = oracle::counted_ranks(x), ry = oracle::counted_ranks(y);
    const double ref = oracle::plain_pearson(rx, ry);
    if (!std::isfinite(ref)) continue;
    spearman_gap = std::max(spearman_gap, std::abs(metrics::spearman(x, y) - ref));
  }
  c.note("Spearman max gap " + fmt("%.1e", spearman_gap));
  c.expect(spearman_gap < 1e-12, "Spearman gap >= 1e-12");

  // Exact Wilcoxon against enumeration.
  double wil_gap = 0;
  std::uniform_int_distribution<int> wn(1, 12), wv(-5, 6);
  for (int t = 0; t < 300; ++t) {
    std::vector<double> d;
    const int n = wn(rng);
    for (int i = 0; i < n; ++i) {
      const int x = wv(rng);
      d.push_back(x == 0 ? 0.5 : x);
    }
    const auto r = metrics::wilcoxon_signed_rank(d);
    c.expect(r.exact, "n <= 12 not on the exact path");
    wil_gap = std::max(wil_gap, std::abs(r.p_value - oracle::enumerated_wilcoxon_p(d)));
  }
  c.note("Wilcoxon max gap " + fmt("%.1e", wil_gap));
  c.expect(wil_gap < 1e-9, "Wilcoxon gap >= 1e-9");

  // Bootstrap: determinism and 1/sqrt(n) width.
  std::normal_distribution<double> noise(0, 1);
  auto sample = [&](int n) {
    std::vector<metrics::PredictionRecord> r;
    for (int i = 0; i < n; ++i) r.push_back({0.0, noise(rng), std::nullopt});
    return r;
  };
  const auto small = sample(400), large = sample(1600);
  const metrics::BootstrapOptions opt{.n_resamples = 2000, .seed = 5};
  const auto a = metrics::bootstrap(small, taskdata::MetricId::kMae, opt);
  const auto b = metrics::bootstrap(small, taskdata::MetricId::kMae, opt);
  c.expect(a.to_json() == b.to_json(), "bootstrap not deterministic under a seed");
  const auto big = metrics::bootstrap(large, taskdata::MetricId::kMae, opt);
  const double ratio = (a.ci_high - a.ci_low) / (big.ci_high - big.ci_low);
  c.note("CI width ratio " + fmt("%.3f", ratio));
  c.expect(std::abs(ratio - 2.0) <= 0.5, "CI width ratio outside 2 +/- 25%");
}

void chemistry(Check& c) {
  std::mt19937_64 rng(99);
  // k-NN over a generated pool.
  std::vector<std::string> pool_smiles;
  std::vector<chem::Fingerprint> pool_fps;
  while (pool_smiles.size() < 1000) {
    auto g = oracle::random_molecule(rng, 24);
    pool_smiles.push_back(chem::canonical_serialize(g));
    pool_fps.push_back(chem::morgan_fingerprint(chem::parse_smiles(pool_smiles.back())));
  }
  std::vector<taskdata::DataPoint> pool;
  for (const auto& s : pool_smiles) pool.push_back(mol(s));
  const auto index = exemplar::ExemplarIndex::build(smiles_task(), pool);
  int knn_bad = 0;
  for (int q = 0; q < 50; ++q) {
    const std::string qs = chem::canonical_serialize(oracle::random_molecule(rng, 24));
    const auto qf = chem::morgan_fingerprint(chem::parse_smiles(qs));
    std::vector<exemplar::Neighbor> want;
    for (std::size_t i = 0; i < pool_fps.size(); ++i) want.push_back({i, chem::tanimoto(qf, pool_fps[i])});
    std::stable_sort(want.begin(), want.end(), [](const auto& x, const auto& y) { return x.similarity > y.similarity; });
    knn_bad += index.query_knn(mol(qs), 1000) != want;
    want.resize(10);
    knn_bad += index.query_knn(mol(qs), 10) != want;
  }
  c.note("k-NN 50 queries x 1000 pool, mismatches " + std::to_string(knn_bad));
  c.expect(knn_bad == 0, "k-NN differs from brute-force ranking");

  // Tanimoto over random fingerprints.
  int tani_bad = 0;
  std::uniform_int_distribution<int> bit(0, 2047), fill(0, 300);
  for (int p = 0; p < 10000; ++p) {
    chem::Fingerprint a(2048), b(2048);
    for (int k = fill(rng); k > 0; --k) a.set(bit(rng));
    for (int k = fill(rng); k > 0; --k) b.set(bit(rng));
    const double ab = chem::tanimoto(a, b), ba = chem::tanimoto(b, a);
    int inter = 0, uni = 0;
    for (int i = 0; i < 2048; ++i) {
      inter += a.test(i) && b.test(i);
      uni += a.test(i) || b.test(i);
    }
    const double ref = uni == 0 ? 1.0 : static_cast<double>(inter) / uni;
    tani_bad += ab != ba || ab < 0 || ab > 1 || chem::tanimoto(a, a) != 1.0 || ab != ref;
  }
  c.note("Tanimoto 10000 pairs, violations " + std::to_string(tani_bad));
  c.expect(tani_bad == 0, "Tanimoto symmetry, identity or bounds violated");

  // Fingerprint invariance under atom reordering.
  int perm_bad = 0;
  for (int m = 0; m < 60; ++m) {
    const auto g = oracle::random_molecule(rng, 24);
    const auto ref = chem::morgan_fingerprint(g);
    std::vector<int> order(static_cast<std::size_t>(g.atom_count()));
    std::iota(order.begin(), order.end(), 0);
    for (int s = 0; s < 100; ++s) {
      std::shuffle(order.begin(), order.end(), rng);
      perm_bad += chem::morgan_fingerprint(g.permuted(order)) != ref;
    }
  }
  c.note("60 molecules x 100 permutations, changed " + std::to_string(perm_bad));
  c.expect(perm_bad == 0, "fingerprint changed under atom permutation");

  // Alignment optimality.
  int align_bad = 0;
  std::uniform_int_distribution<std::size_t> len(1, 7);
  const seqalign::ScoreScheme schemes[] = {{1, 0, -1}, {2, -1, -2}, {1, -1, -1}};
  for (int t = 0; t < 500; ++t) {
    const std::string a = oracle::random_sequence(rng, len(rng), "ACGT");
    const std::string b = oracle::random_sequence(rng, len(rng), "ACGT");
    const auto& s = schemes[t % 3];
    const auto r = seqalign::global_align(seqalign::make_sequence(seqalign::SequenceKind::kNucleotide, a),
                                          seqalign::make_sequence(seqalign::SequenceKind::kNucleotide, b), s);
    const auto best = oracle::best_alignment(a, b, s);
    align_bad += r.score != best.score || r.matches != best.max_matches;
  }
  c.note("alignment 500 pairs, non-optimal " + std::to_string(align_bad));
  c.expect(align_bad == 0, "alignment not optimal");
}

void prompt_goldens(Check& c) {
  const auto bundle = taskdata::TaskCatalog::load(kFixtures / "tasks.json").load_bundle("bbb");
  const auto test = taskdata::split_indices(bundle, taskdata::Split::kTest);
  const auto& query = bundle.points[test.at(0)];
  c.expect(promptgen::render_prompt(bundle.spec, query, {}).text == slurp(kFixtures / "prompts" / "bbb_zero_shot.txt"),
           "zero-shot render differs from golden");
  std::vector<taskdata::DataPoint> shots;
  std::ifstream in(kFixtures / "prompts" / "bbb_10_shot_smiles.txt");
  for (std::string line; std::getline(in, line);)
    if (!line.empty()) shots.push_back(mol(line));
  c.expect(shots.size() == 10, "10-shot exemplar list incomplete");
  c.expect(promptgen::render_prompt(bundle.spec, query, shots).text == slurp(kFixtures / "prompts" / "bbb_10_shot.txt"),
           "10-shot render differs from golden");

  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> lo(-100, 100), width(1e-3, 50), u(0, 1);
  double worst = 0;
  for (int t = 0; t < 10000; ++t) {
    const double a = lo(rng);
    const taskdata::LabelRange r{a, a + width(rng)};
    const double y = r.min + u(rng) * (r.max - r.min);
    const double err = std::abs(promptgen::unbin_label(promptgen::bin_label(y, r), r) - y) / ((r.max - r.min) / 2000);
    worst = std::max(worst, err);
  }
  c.note("worst bin round trip " + fmt("%.4f", worst) + " x (max-min)/2000");
  c.expect(worst <= 1.0 + 1e-9, "bin round trip exceeds (max-min)/2000");

  std::vector<taskdata::DataPoint> train;
  for (const auto& p : bundle.points)
    if (p.split == taskdata::Split::kTrain) train.push_back(p);
  const auto idx = exemplar::ExemplarIndex::build(bundle.spec, train);
  promptgen::FewShotPolicy policy;
  policy.mode = promptgen::ShotMode::kTrainRandom;
  policy.rng_seed = 31337;
  Rng draws(policy.rng_seed);
  int zero = 0;
  for (int d = 0; d < 10000; ++d) zero += promptgen::choose_shots(policy, idx, train[0], draws).empty();
  c.note("zero-shot rate " + fmt("%.4f", zero / 10000.0));
  c.expect(std::abs(zero / 10000.0 - 0.70) <= 0.02, "zero-shot rate outside 0.70 +/- 0.02");
}

agent::Clock ticking_clock() {
  auto t = std::make_shared<std::chrono::steady_clock::time_point>();
  return [t] { return *t += std::chrono::milliseconds(5); };
}

void agent_replay(Check& c) {
  const fs::path dir = kFixtures / "agent" / "candidate_choice";
  const auto script = agent::EpisodeScript::load(dir / "script.json");
  auto web = std::make_shared<tools::CassetteWebTransport>(kFixtures / "tools");
  const fs::path log = fs::temp_directory_path() / "txbench_acceptance_worked.jsonl";
  auto replay = [&](std::optional<fs::path> log_path) {
    agent::AgentOptions opt;
    opt.clock = ticking_clock();
    opt.log_path = std::move(log_path);
    return agent::replay_episode(script, web, dir / "llm.jsonl", opt);
  };
  const auto ep = replay(log);
  std::vector<std::string> tools;
  for (const auto& s : ep.steps) tools.push_back(s.tool);
  c.note(std::to_string(ep.steps.size()) + " steps");
  c.expect(tools == std::vector<std::string>{"SMILES to Description", "SMILES to Description", "ClinicalTox"},
           "tool sequence differs");
  c.expect(ep.terminated_by == agent::Termination::kFinalAnswer, "episode did not end in a final answer");
  c.expect(ep.final_response.find("Candidate B") != std::string::npos, "final answer lacks 'Candidate B'");
  const std::string first = ep.to_json().dump();
  bool same = true;
  for (int i = 0; i < 3; ++i) same = same && replay(std::nullopt).to_json().dump() == first;
  c.expect(same, "replays differ");

  // Crash during step 3: keep two complete steps and a torn third line.
  std::ifstream in(log);
  std::string l1, l2, l3;
  std::getline(in, l1);
  std::getline(in, l2);
  std::getline(in, l3);
  in.close();
  {
    std::ofstream out(log, std::ios::trunc);
    out << l1 << '\n' << l2 << '\n' << l3.substr(0, l3.size() / 2);
  }
  const auto partial = agent::read_event_log(log);
  c.expect(partial.steps.size() == 2, "recovered log should keep 2 completed steps");
  auto cassette = std::make_shared<llm::ReplayTransport>(dir / "llm.jsonl");
  llm::EndpointConfig cfg;
  cfg.max_retries = 0;
  llm::Client client(cfg, cassette);
  const auto registry =
      agent::canonical_registry(agent::offline_tool_env(std::make_shared<llm::Client>(cfg, cassette), web));
  agent::AgentOptions opt;
  opt.summary_max_chars = script.summary_max_chars;
  opt.clock = ticking_clock();
  const auto resumed = agent::resume_episode(client, registry, script.question, log, opt);
  bool kept = resumed.steps.size() == 3;
  for (std::size_t i = 0; kept && i < 2; ++i) kept = resumed.steps[i] == ep.steps[i];
  c.note("resumed with " + std::to_string(partial.steps.size()) + " of 3 steps kept");
  c.expect(kept && resumed.final_response == ep.final_response, "resumed episode differs");
}

void contamination(Check& c) {
  taskdata::DatasetBundle b;
  b.spec.task_id = "planted";
  b.spec.kind = taskdata::TaskKind::kBinary;
  b.spec.metric_id = taskdata::MetricId::kAccuracy;
  b.spec.feature_schema = {taskdata::FeatureKind::kSmiles, taskdata::FeatureKind::kAminoAcid};
  b.spec.question_template = "{feature_1} {feature_2}";
  b.points.push_back({{{taskdata::FeatureKind::kSmiles, "CCO"}, {taskdata::FeatureKind::kAminoAcid, "MKV"}}, true,
                      taskdata::Split::kTrain});
  const int n_test = 200;
  for (int i = 0; i < n_test; ++i)
    b.points.push_back({{{taskdata::FeatureKind::kSmiles, "C" + std::string(static_cast<std::size_t>(i + 1), 'C') + "N"},
                         {taskdata::FeatureKind::kAminoAcid, "MKT" + std::to_string(i)}},
                        i % 3 != 0,
                        taskdata::Split::kTest});
  std::mt19937_64 rng(8);
  std::vector<std::size_t> test(n_test);
  std::iota(test.begin(), test.end(), std::size_t{1});
  std::shuffle(test.begin(), test.end(), rng);
  std::vector<std::size_t> planted(test.begin(), test.begin() + n_test / 5);
  // Train-only features and near misses must not flag anything.
  std::vector<std::string> corpus = {"CCO", "MKV", "unrelated line", "MKT"};
  for (std::size_t k = 0; k < planted.size(); ++k) {
    const auto& f = b.points[planted[k]].features[k % 2].value;
    corpus.push_back(k % 4 == 0 ? "  " + f + "\t" : f);
  }
  std::sort(planted.begin(), planted.end());
  const auto flagged = contam::flag_contaminated(b, contam::CorpusIndex::from_snippets(corpus));
  c.note(std::to_string(flagged.size()) + " of " + std::to_string(n_test) + " flagged, " +
         std::to_string(planted.size()) + " planted");
  c.expect(flagged == planted, "flag set differs from planted set");

  eval::EvalRun run;
  run.task_id = b.spec.task_id;
  std::bernoulli_distribution right(0.75);
  for (std::size_t i = 0; i < b.points.size(); ++i) {
    if (b.points[i].split != taskdata::Split::kTest) continue;
    eval::PointResult p;
    p.point_index = i;
    const bool truth = std::get<bool>(b.points[i].label);
    const bool pred = right(rng) ? truth : !truth;
    p.record = {truth, pred, pred ? 1.0 : 0.0};
    run.points.push_back(p);
  }
  const metrics::BootstrapOptions opt{.n_resamples = 500, .seed = 4};
  const auto none = contam::filtered_report(run, {}, taskdata::MetricId::kAccuracy, opt);
  c.expect(none.report_full.to_json() == none.report_filtered.to_json(), "zero-flag filtered report differs");
}

void throughput(Check& c) {
  std::mt19937_64 rng(5);
  std::vector<taskdata::DataPoint> pool;
  while (pool.size() < 20000) pool.push_back(mol(chem::canonical_serialize(oracle::random_molecule(rng, 24))));
  const auto index = exemplar::ExemplarIndex::build(smiles_task(), pool);
  const int queries = 30;
  const auto t0 = Clock::now();
  std::size_t sink = 0;
  for (int q = 0; q < queries; ++q) sink += index.query_knn(pool[static_cast<std::size_t>(q) * 7], 10).size();
  const double rate = queries * static_cast<double>(pool.size()) / seconds_since(t0);
  c.note("scan " + fmt("%.0f", rate) + " fp/s");
  c.expect(sink == static_cast<std::size_t>(queries) * 10 && rate >= 100000, "scan below 100k fingerprints/s/core");

  llm::EndpointConfig cfg;
  cfg.max_in_flight = 4;
  llm::Client client(cfg, std::make_shared<llm::FixedMockTransport>("(B)", std::chrono::milliseconds(10)));
  const auto r = eval::bench_throughput(client, {"ping"}, std::chrono::milliseconds(3000), 4);
  c.note("bench " + fmt("%.3gM/day/worker", r.samples_per_day_per_worker / 1e6));
  c.expect(std::abs(r.samples_per_day_per_worker - 8.64e6) <= 0.864e6, "bench outside 8.64M/day/worker +/- 10%");
  c.expect(r.failed == 0, "bench requests failed");
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<void(Check&)>>> criteria = {
      {"reference-table-reproduction", reference_tables},
      {"chat-gap-medians", chat_medians},
      {"specialist-comparison", specialist},
      {"split-validation", split_validation},
      {"metric-oracles", metric_oracles},
      {"chemistry", chemistry},
      {"prompt-goldens", prompt_goldens},
      {"agent-replay", agent_replay},
      {"contamination", contamination},
      {"throughput", throughput},
  };
  const std::string filter = argc > 1 ? argv[1] : "";
  int failed = 0, ran = 0;
  for (const auto& [name, fn] : criteria) {
    if (!filter.empty() && name.find(filter) == std::string::npos) continue;
    ++ran;
    Check c;
    const auto t0 = Clock::now();
    try {
      fn(c);
    } catch (const std::exception& e) {
      c.expect(false, std::string("exception: ") + e.what());
    }
    const double secs = seconds_since(t0);
    failed += !c.ok();
    std::cout << (c.ok() ? "PASS " : "FAIL ") << name << " (" << fmt("%.2fs", secs) << "): " << c.summary() << "\n"
              << std::flush;
  }
  std::cout << ran - failed << "/" << ran << " criteria passed\n";
  return failed == 0 ? 0 : 1;
}

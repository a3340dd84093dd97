#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "txbench/common/hashing.hpp"
#include "txbench/evalrunner/eval.hpp"

namespace txbench::eval {
namespace {

using taskdata::DataPoint;
using taskdata::FeatureKind;
using taskdata::Split;

const std::filesystem::path kFixtures = TXBENCH_FIXTURES_DIR;

std::filesystem::path fresh_dir(const std::string& name) {
  auto d = std::filesystem::temp_directory_path() / ("txbench_eval_" + name);
  std::filesystem::remove_all(d);
  return d;
}

taskdata::DatasetBundle toy_bundle(int n_test, bool all_positive, MetricId metric = MetricId::kAccuracy) {
  taskdata::DatasetBundle b;
  b.spec.task_id = "toy";
  b.spec.kind = taskdata::TaskKind::kBinary;
  b.spec.metric_id = metric;
  b.spec.instruction = "Answer the following question about drug properties.";
  b.spec.context = "Toy.";
  b.spec.feature_schema = {FeatureKind::kSmiles};
  b.spec.question_template = "Is it active?\n\n(A) no (B) yes\n\nDrug SMILES: {feature_1}";
  const std::vector<std::string> train = {"CCO", "CCN", "CCC", "c1ccccc1", "CC(=O)O", "OCCO"};
  for (std::size_t i = 0; i < train.size(); ++i) b.points.push_back({{{FeatureKind::kSmiles, train[i]}}, i % 2 == 0, Split::kTrain});
  const std::vector<std::string> test = {"CCCO", "CCCN", "c1ccccc1O", "CC(=O)N", "OCCCO", "CCOC", "NCCN"};
  for (int i = 0; i < n_test; ++i)
    b.points.push_back({{{FeatureKind::kSmiles, test[static_cast<std::size_t>(i) % test.size()]}}, all_positive || i % 2 == 0, Split::kTest});
  b.counts = {train.size(), 0, static_cast<std::size_t>(n_test)};
  return b;
}

llm::EndpointConfig cfg() {
  llm::EndpointConfig c;
  c.max_in_flight = 2;
  c.backoff_base = std::chrono::milliseconds(0);
  return c;
}

// Deterministic reply from the prompt hash.
std::shared_ptr<llm::Transport> hash_model() {
  return std::make_shared<llm::FunctionTransport>([](const llm::EndpointConfig&, const std::string& p) -> std::string {
    const char c = sha256_hex(p)[0];
    if (c == 'f') return "I cannot say.";
    return (c < '8') ? "Answer: (B)" : "(A)";
  });
}

TEST(RunTaskEval, FixedMockOnAllPositiveTask) {
  auto bundle = toy_bundle(5, true);
  auto index = exemplar::ExemplarIndex::build(bundle.spec, exemplar::eval_pool(bundle));
  llm::Client client(cfg(), std::make_shared<llm::FixedMockTransport>("(B)"));
  EvalOptions opt;
  opt.bootstrap.n_resamples = 50;
  EvalRun run = run_task_eval(bundle, index, opt, client);
  EXPECT_EQ(run.points.size(), 5u);
  EXPECT_TRUE(run.report_error.empty());
  EXPECT_EQ(run.report.value, 1.0);
  for (const auto& p : run.points) {
    EXPECT_EQ(p.exemplar_ids.size(), 6u);  // whole pool when smaller than eval_shots
    EXPECT_EQ(p.record.score, 1.0);
  }
}

TEST(RunTaskEval, ReplayIsDeterministicAndWritesArtifacts) {
  auto bundle = toy_bundle(5, false);
  auto index = exemplar::ExemplarIndex::build(bundle.spec, exemplar::eval_pool(bundle));
  const auto root = fresh_dir("replay");
  std::filesystem::create_directories(root);
  const auto cassette = root / "cassette.jsonl";
  {
    llm::Client recorder(cfg(), std::make_shared<llm::RecordingTransport>(hash_model(), cassette));
    run_task_eval(bundle, index, EvalOptions{}, recorder);
  }
  std::vector<std::string> reports;
  for (const char* ts : {"r1", "r2"}) {
    llm::Client client(cfg(), llm::make_transport({llm::TransportKind::kReplay, cassette}));
    EvalOptions opt;
    opt.runs_root = root / "runs";
    opt.timestamp = ts;
    opt.bootstrap = {.n_resamples = 100, .seed = 7};
    EvalRun run = run_task_eval(bundle, index, opt, client);
    EXPECT_EQ(run.run_dir, root / "runs" / "toy" / ts);
    for (const char* f : {"records.jsonl", "report.json", "checkpoint.json", "run.json"})
      EXPECT_TRUE(std::filesystem::exists(run.run_dir / f)) << f;
    reports.push_back(read_file(run.run_dir / "report.json") + read_file(run.run_dir / "records.jsonl"));
  }
  EXPECT_EQ(reports[0], reports[1]);
}

TEST(RunTaskEval, ResumeMatchesUninterruptedRun) {
  auto bundle = toy_bundle(5, false);
  auto index = exemplar::ExemplarIndex::build(bundle.spec, exemplar::eval_pool(bundle));
  const auto root = fresh_dir("resume");
  EvalOptions opt;
  opt.runs_root = root;
  opt.batch_size = 1;
  opt.bootstrap.n_resamples = 100;

  llm::Client full_client(cfg(), hash_model());
  opt.timestamp = "full";
  EvalRun full = run_task_eval(bundle, index, opt, full_client);

  std::atomic<int> calls{0};
  auto counting = std::make_shared<llm::FunctionTransport>([&, inner = hash_model()](const llm::EndpointConfig& c, const std::string& p) {
    ++calls;
    return inner->send(c, p);
  });
  llm::Client client(cfg(), counting);
  opt.timestamp = "partial";
  opt.interrupt_after = 3;
  try {
    run_task_eval(bundle, index, opt, client);
    FAIL();
  } catch (const Interrupted& e) {
    EXPECT_EQ(e.completed(), 3u);
  }
  EXPECT_EQ(calls.load(), 3);
  opt.interrupt_after = 0;
  opt.resume_dir = root / "toy" / "partial";
  EvalRun resumed = run_task_eval(bundle, index, opt, client);
  EXPECT_EQ(calls.load(), 5);
  EXPECT_EQ(read_file(resumed.run_dir / "records.jsonl"), read_file(full.run_dir / "records.jsonl"));
  EXPECT_EQ(read_file(resumed.run_dir / "report.json"), read_file(full.run_dir / "report.json"));
}

TEST(RunTaskEval, UnparseableAndFailuresAreRecorded) {
  auto bundle = toy_bundle(7, false, MetricId::kAuroc);
  auto index = exemplar::ExemplarIndex::build(bundle.spec, exemplar::eval_pool(bundle));
  int k = 0;
  std::mutex mu;
  auto mixed = std::make_shared<llm::FunctionTransport>([&](const llm::EndpointConfig&, const std::string&) -> std::string {
    std::lock_guard lock(mu);
    switch (k++ % 4) {
      case 0: return "(B)";
      case 1: return "(A)";
      case 2: return "no idea";
      default: throw llm::EndpointError(400, "rejected");
    }
  });
  llm::EndpointConfig c = cfg();
  c.max_in_flight = 1;
  llm::Client client(c, mixed);
  EvalOptions opt;
  opt.bootstrap.n_resamples = 50;
  EvalRun run = run_task_eval(bundle, index, opt, client);
  ASSERT_EQ(run.points.size(), 7u);
  int unparseable = 0, failed = 0;
  for (const auto& p : run.points) {
    if (p.error_kind == "unparseable") ++unparseable;
    if (p.error_kind == "endpoint_error") ++failed;
  }
  EXPECT_EQ(unparseable, 2);
  EXPECT_EQ(failed, 1);
  if (run.report_error.empty()) {
    EXPECT_EQ(run.report.n_unparseable, 3u);
    ASSERT_TRUE(run.pessimistic_report.has_value());
    EXPECT_EQ(run.pessimistic_report->n_unparseable, 0u);
  }
}

TEST(RunTaskEval, RegressionRepliesAreUnbinned) {
  promptgen::AnswerCodec codec{taskdata::TaskKind::kRegression, taskdata::LabelRange{-2, 2}};
  auto rec = score_reply("Answer: 750", codec, 1.0);
  ASSERT_TRUE(rec.prediction);
  EXPECT_DOUBLE_EQ(std::get<double>(*rec.prediction), 1.0);
  EXPECT_THROW(score_reply("none", codec, 1.0), promptgen::Unparseable);
}

TEST(RelativeChange, Examples) {
  EXPECT_EQ(relative_change(0.7, 0.7, MetricId::kAuroc), 0.0);
  EXPECT_DOUBLE_EQ(relative_change(0.9, 0.6, MetricId::kAuroc), 0.5);
  EXPECT_DOUBLE_EQ(relative_change(0.5, 1.0, MetricId::kMae), 0.5);
  EXPECT_THROW(relative_change(0.5, 0.0, MetricId::kAccuracy), ZeroBaseline);
}

ModelTable random_table(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  std::bernoulli_distribution err(0.3);
  ModelTable t;
  for (int i = 0; i < n; ++i) t.push_back({"t" + std::to_string(i), err(rng) ? MetricId::kMae : MetricId::kAuroc, u(rng)});
  return t;
}

TEST(CompareModels, SelfSwapAndScaling) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    ModelTable a = random_table(rng, 40), b = random_table(rng, 40);
    for (std::size_t i = 0; i < b.size(); ++i) b[i].metric = a[i].metric;
    ComparisonReport self = compare_models(a, a);
    EXPECT_EQ(self.ties, 40);
    EXPECT_EQ(self.median_relative_change, 0.0);
    EXPECT_FALSE(self.wilcoxon.has_value());

    ComparisonReport ab = compare_models(a, b), ba = compare_models(b, a);
    EXPECT_EQ(ab.wins_a + ab.wins_b + ab.ties, 40);
    EXPECT_EQ(ab.wins_a, ba.wins_b);
    EXPECT_EQ(ab.wins_b, ba.wins_a);
    for (std::size_t i = 0; i < ab.per_task.size(); ++i)
      ASSERT_NEAR(*ab.per_task[i].relative_change_mean, -*ba.per_task[i].relative_change_mean, 1e-12);

    ModelTable a2 = a, b2 = b;
    std::uniform_real_distribution<double> scale(0.1, 10);
    for (std::size_t i = 0; i < a2.size(); ++i) {
      const double c = scale(rng);
      *a2[i].value *= c;
      *b2[i].value *= c;
    }
    ComparisonReport scaled = compare_models(a2, b2);
    for (std::size_t i = 0; i < ab.per_task.size(); ++i) ASSERT_EQ(scaled.per_task[i].winner, ab.per_task[i].winner);
  }
  EXPECT_THROW(compare_models(random_table(rng, 3), random_table(rng, 4)), metrics::LengthMismatch);
  ModelTable x = {{"t", MetricId::kMae, 1.0}}, y = {{"t", MetricId::kAuroc, 1.0}};
  EXPECT_THROW(compare_models(x, y), EvalError);
}

TEST(CompareModels, UnavailableAndZeroBaseline) {
  ModelTable a = {{"x", MetricId::kAccuracy, 0.2}, {"y", MetricId::kAuroc, 0.8}, {"z", MetricId::kMae, 1.0}};
  ModelTable b = {{"x", MetricId::kAccuracy, 0.0}, {"y", MetricId::kAuroc, std::nullopt}, {"z", MetricId::kMae, 1.05}};
  ComparisonReport r = compare_models(a, b);
  EXPECT_EQ(r.unavailable, (std::vector<std::string>{"y"}));
  ASSERT_EQ(r.per_task.size(), 2u);
  EXPECT_FALSE(r.per_task[0].relative_change.has_value());
  EXPECT_EQ(r.per_task[0].winner, Winner::kA);
  EXPECT_EQ(r.wins_a, 2);
  EXPECT_NEAR(r.median_relative_change, 0.05 / 1.05, 1e-12);
}

TEST(ReferenceTables, PairsFileMatchesWideTable) {
  const auto dir = kFixtures / "reference_tables";
  auto [a, b] = load_pairs(dir / "txgemma_27b_predict_vs_txllm_m.tsv");
  ModelTable wa = load_table_column(dir / "tdc_results.tsv", "txgemma_27b_predict");
  ModelTable wb = load_table_column(dir / "tdc_results.tsv", "txllm_m");
  ASSERT_EQ(a.size(), 66u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].task_id, wa[i].task_id);
    EXPECT_EQ(a[i].value, wa[i].value);
    EXPECT_EQ(b[i].value, wb[i].value);
  }
  auto cols = table_columns(dir / "tdc_results.tsv");
  EXPECT_EQ(cols.size(), 11u);
  EXPECT_THROW(load_table_column(dir / "tdc_results.tsv", "nope"), EvalError);
}

TEST(BenchThroughput, FixedLatencyAndScaling) {
  llm::EndpointConfig c = cfg();
  c.max_in_flight = 4;
  llm::Client client(c, std::make_shared<llm::FixedMockTransport>("(B)", std::chrono::milliseconds(10)));
  ThroughputReport one = bench_throughput(client, {"p"}, std::chrono::milliseconds(1000), 1);
  EXPECT_NEAR(one.samples_per_day, 8.64e6, 0.864e6);
  ThroughputReport two = bench_throughput(client, {"p"}, std::chrono::milliseconds(1000), 2);
  const double ratio = two.samples_per_day / one.samples_per_day;
  EXPECT_GE(ratio, 1.8);
  EXPECT_LE(ratio, 2.05);
  ThroughputReport none = bench_throughput(client, {"p"}, std::chrono::milliseconds(0), 1);
  EXPECT_EQ(none.completed, 0u);
  EXPECT_EQ(none.samples_per_day, 0.0);
}

}  // namespace
}  // namespace txbench::eval

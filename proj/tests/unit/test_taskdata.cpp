#include <gtest/gtest.h>

#include <filesystem>
#include <random>
#include <set>

#include "txbench/taskdata/task.hpp"

namespace txbench::taskdata {
namespace {

const std::filesystem::path kFixtures = TXBENCH_FIXTURES_DIR;

TaskSpec toy_spec(TaskKind kind = TaskKind::kBinary, std::size_t n_features = 1) {
  TaskSpec t;
  t.task_id = "toy";
  t.kind = kind;
  t.metric_id = kind == TaskKind::kRegression ? MetricId::kMae : MetricId::kAccuracy;
  t.instruction = "Answer.";
  t.context = "Toy.";
  t.question_template = "Q?";
  for (std::size_t i = 0; i < n_features; ++i) {
    t.feature_schema.push_back(i == 0 ? FeatureKind::kSmiles : FeatureKind::kText);
    t.question_template += "\n\nF" + std::to_string(i + 1) + ": " + placeholder(i);
  }
  if (kind == TaskKind::kRegression) t.label_range = LabelRange{0.0, 10.0};
  return t;
}

TEST(LoadTask, AmesFixtureCounts) {
  TaskCatalog catalog = TaskCatalog::load(kFixtures / "tasks.json");
  DatasetBundle ames = catalog.load_bundle("ames");
  EXPECT_EQ(ames.counts, (SplitCounts{5093, 728, 1457}));
  EXPECT_TRUE(validate_counts(ames, {5093, 728, 1457}).ok);
  ValidationReport off = validate_counts(ames, {5093, 728, 1458});
  EXPECT_FALSE(off.ok);
  ASSERT_EQ(off.mismatches.size(), 1u);
  EXPECT_EQ(off.mismatches[0].split, Split::kTest);
  EXPECT_EQ(off.mismatches[0].expected, 1458u);
  EXPECT_EQ(off.mismatches[0].found, 1457u);
}

TEST(LoadTask, EveryCatalogTaskMatchesReferenceCounts) {
  TaskCatalog catalog = TaskCatalog::load(kFixtures / "tasks.json");
  ASSERT_GE(catalog.tasks().size(), 5u);
  for (const TaskSpec& spec : catalog.tasks()) {
    SCOPED_TRACE(spec.task_id);
    ASSERT_TRUE(spec.expected_counts.has_value());
    DatasetBundle b = catalog.load_bundle(spec.task_id);
    EXPECT_TRUE(validate_counts(b, *spec.expected_counts).ok);
  }
}

TEST(LoadTask, EmptyFileIsMalformedRowZero) {
  try {
    parse_task("", toy_spec());
    FAIL();
  } catch (const MalformedRow& e) {
    EXPECT_EQ(e.line_no(), 0u);
  }
}

TEST(LoadTask, ThreeRowsOnePerSplit) {
  DatasetBundle b = parse_task("split\tfeature_1\tlabel\ntrain\tCCO\t1\nval\tCCN\t0\ntest\tCCC\t1\n", toy_spec());
  EXPECT_EQ(b.counts, (SplitCounts{1, 1, 1}));
  EXPECT_EQ(std::get<bool>(b.points[1].label), false);
  EXPECT_EQ(b.points[1].split, Split::kValidation);
}

TEST(LoadTask, Errors) {
  const TaskSpec spec = toy_spec();
  EXPECT_THROW(parse_task("split\tfeature_1\tfeature_2\tlabel\n", spec), SchemaMismatch);
  try {
    parse_task("split\tfeature_1\tlabel\ntrain\tCCO\t1\ntrain\tCCO\n", spec);
    FAIL();
  } catch (const MalformedRow& e) {
    EXPECT_EQ(e.line_no(), 3u);
  }
  try {
    parse_task("split\tfeature_1\tlabel\nholdout\tCCO\t1\n", spec);
    FAIL();
  } catch (const UnknownSplitTag& e) {
    EXPECT_EQ(e.line_no(), 2u);
  }
  EXPECT_THROW(parse_task("split\tfeature_1\tlabel\ntrain\tCCO\tyes\n", spec), MalformedRow);
  EXPECT_THROW(parse_task("split\tfeature_1\tlabel\ntrain\tCCO\tnan\n", toy_spec(TaskKind::kRegression)),
               MalformedRow);
  EXPECT_THROW(parse_task("split\tfeature_1\tlabel\ntrain\tCCO\t\n", toy_spec(TaskKind::kGeneration)),
               MalformedRow);
}

TEST(LoadTask, RegressionRangeFromTrainOnly) {
  TaskSpec spec = toy_spec(TaskKind::kRegression);
  spec.label_range.reset();
  DatasetBundle b =
      parse_task("split\tfeature_1\tlabel\ntrain\tC\t-2.5\ntrain\tCC\t4\ntest\tCCC\t100\nvalid\tN\t-50\n", spec);
  ASSERT_TRUE(b.spec.label_range);
  EXPECT_EQ(*b.spec.label_range, (LabelRange{-2.5, 4.0}));
}

TEST(TaskSpec, Invariants) {
  TaskSpec t = toy_spec(TaskKind::kBinary, 2);
  EXPECT_NO_THROW(t.validate());
  t.question_template = "only {feature_1}";
  EXPECT_THROW(t.validate(), InvalidTaskSpec);
  t.question_template = "{feature_1} {feature_2} {feature_1}";
  EXPECT_THROW(t.validate(), InvalidTaskSpec);
  t.question_template = "{feature_1} {feature_2} {feature_3}";
  EXPECT_THROW(t.validate(), InvalidTaskSpec);
  TaskSpec r = toy_spec(TaskKind::kRegression);
  r.label_range = LabelRange{1.0, 1.0};
  EXPECT_THROW(r.validate(), InvalidTaskSpec);
  r.label_range.reset();
  EXPECT_THROW(r.validate(), InvalidTaskSpec);
}

TEST(IterSplit, ExactAndStable) {
  DatasetBundle b = parse_task(
      "split\tfeature_1\tlabel\ntrain\tC\t1\ntest\tCC\t0\ntrain\tCCC\t0\nvalid\tN\t1\n", toy_spec());
  std::vector<std::string> train;
  for (const DataPoint& p : iter_split(b, Split::kTrain)) train.push_back(p.features[0].value);
  EXPECT_EQ(train, (std::vector<std::string>{"C", "CCC"}));
  std::vector<std::string> again;
  for (const DataPoint& p : iter_split(b, Split::kTrain)) again.push_back(p.features[0].value);
  EXPECT_EQ(train, again);

  DatasetBundle no_test = parse_task("split\tfeature_1\tlabel\ntrain\tC\t1\n", toy_spec());
  EXPECT_TRUE(std::ranges::empty(iter_split(no_test, Split::kTest)));
  DatasetBundle empty = parse_task("split\tfeature_1\tlabel\n", toy_spec());
  EXPECT_TRUE(validate_counts(empty, {0, 0, 0}).ok);
}

DatasetBundle random_bundle(std::mt19937_64& rng) {
  TaskSpec spec = toy_spec(TaskKind::kGeneration, 2);
  DatasetBundle b;
  b.spec = spec;
  std::uniform_int_distribution<int> n_dist(0, 40), split_dist(0, 2), len(1, 12), ch(0, 7);
  const char alphabet[] = {'C', 'N', '\t', '\n', '\\', ' ', 'x', 'O'};
  auto random_text = [&](bool allow_specials) {
    std::string s;
    int n = len(rng);
    for (int i = 0; i < n; ++i) {
      char c = alphabet[ch(rng)];
      if (!allow_specials && (c == '\t' || c == '\n' || c == ' ' || c == '\\')) c = 'C';
      s.push_back(c);
    }
    return s;
  };
  int n = n_dist(rng);
  for (int i = 0; i < n; ++i) {
    DataPoint p;
    p.split = static_cast<Split>(split_dist(rng));
    p.features.push_back({FeatureKind::kSmiles, random_text(false)});
    std::string t = random_text(true);
    if (t.front() == '\\') t.front() = 'x';
    p.features.push_back({FeatureKind::kText, t});
    p.label = random_text(true);
    b.points.push_back(p);
    switch (p.split) {
      case Split::kTrain: ++b.counts.train; break;
      case Split::kValidation: ++b.counts.validation; break;
      case Split::kTest: ++b.counts.test; break;
    }
  }
  return b;
}

TEST(TaskdataProperties, PartitionAndRoundTrip) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    DatasetBundle b = random_bundle(rng);
    std::set<std::size_t> seen;
    std::size_t total = 0;
    for (Split s : {Split::kTrain, Split::kValidation, Split::kTest}) {
      for (std::size_t i : split_indices(b, s)) {
        EXPECT_TRUE(seen.insert(i).second);
        EXPECT_EQ(b.points[i].split, s);
        ++total;
      }
    }
    EXPECT_EQ(total, b.points.size());

    DatasetBundle again = parse_task(serialize_task(b), b.spec);
    ASSERT_EQ(again.points.size(), b.points.size());
    for (std::size_t i = 0; i < b.points.size(); ++i) ASSERT_EQ(again.points[i], b.points[i]) << i;
    EXPECT_EQ(again.counts, b.counts);
  }
}

TEST(TaskCatalog, JsonRoundTrip) {
  TaskCatalog catalog = TaskCatalog::load(kFixtures / "tasks.json");
  for (const TaskSpec& t : catalog.tasks()) {
    TaskSpec back = task_from_json(task_to_json(t));
    EXPECT_EQ(task_to_json(back), task_to_json(t));
  }
  EXPECT_THROW(catalog.find("nope"), std::out_of_range);
}

}  // namespace
}  // namespace txbench::taskdata

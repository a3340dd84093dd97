#include <gtest/gtest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "txbench/chem/smiles.hpp"
#include "txbench/common/text.hpp"

#include "txbench/common/json.hpp"
#include "txbench/promptgen/prompt.hpp"

namespace txbench::promptgen {
namespace {

using taskdata::DataPoint;
using taskdata::FeatureKind;
using taskdata::Split;
using taskdata::TaskSpec;

const std::filesystem::path kFixtures = TXBENCH_FIXTURES_DIR;

std::string golden(const std::string& name) { return read_file(kFixtures / "prompts" / name); }

std::size_t count_of(const std::string& hay, const std::string& needle) {
  std::size_t n = 0;
  for (std::size_t p = hay.find(needle); p != std::string::npos; p = hay.find(needle, p + 1)) ++n;
  return n;
}

taskdata::DatasetBundle bbb() {
  return taskdata::TaskCatalog::load(kFixtures / "tasks.json").load_bundle("bbb");
}

const DataPoint& first_test(const taskdata::DatasetBundle& b) {
  for (const DataPoint& p : b.points)
    if (p.split == Split::kTest) return p;
  throw std::logic_error("no test point");
}

DataPoint mol(const std::string& smiles, taskdata::LabelValue label = true) {
  return DataPoint{{{FeatureKind::kSmiles, smiles}}, label, Split::kTrain};
}

TEST(Binning, EndpointsAndMidpoint) {
  const LabelRange r{-7.8, -3.5};
  EXPECT_EQ(bin_label(r.min, r), 0);
  EXPECT_EQ(bin_label(r.max, r), 1000);
  EXPECT_EQ(bin_label((r.min + r.max) / 2, r), 500);
  EXPECT_EQ(bin_label(-100.0, r), 0);
  EXPECT_EQ(bin_label(100.0, r), 1000);
  EXPECT_EQ(bin_label(0.5, {0, 1000}), 1);
  EXPECT_EQ(unbin_label(0, r), r.min);
  EXPECT_EQ(unbin_label(1000, r), r.max);
  EXPECT_THROW(bin_label(1.0, {2.0, 2.0}), DegenerateRange);
  EXPECT_THROW(unbin_label(1001, r), OutOfRangeBin);
  EXPECT_THROW(unbin_label(-1, r), OutOfRangeBin);
}

TEST(Binning, MonotoneAndRoundTripBound) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> lo(-100, 100), width(1e-3, 50), u(0, 1);
  for (int trial = 0; trial < 2000; ++trial) {
    const double a = lo(rng);
    const LabelRange r{a, a + width(rng)};
    const double span = r.max - r.min;
    const double y1 = r.min + u(rng) * span;
    const double y2 = r.min + u(rng) * span;
    if (y1 < y2) {
      EXPECT_LE(bin_label(y1, r), bin_label(y2, r));
    }
    EXPECT_LE(std::abs(unbin_label(bin_label(y1, r), r) - y1), span / 2000 * (1 + 1e-9));
    const double outside = r.min - 1.0 - u(rng) * 10;
    EXPECT_LE(bin_label(outside, r), bin_label(y1, r));
  }
}

TEST(FormatAnswer, Examples) {
  AnswerCodec binary;
  EXPECT_EQ(format_answer(true, binary), "(B)");
  EXPECT_EQ(format_answer(false, binary), "(A)");
  AnswerCodec reg{TaskKind::kRegression, LabelRange{0, 1000}};
  EXPECT_EQ(format_answer(57.0, reg), "057");
  EXPECT_EQ(format_answer(788.0, reg), "788");
  EXPECT_EQ(format_answer(0.0, reg), "000");
  EXPECT_EQ(format_answer(1000.0, reg), "1000");
  AnswerCodec gen{TaskKind::kGeneration};
  EXPECT_EQ(format_answer(std::string("CCO.O"), gen), "CCO.O");
  EXPECT_THROW(format_answer(1.0, binary), KindMismatch);
  EXPECT_THROW(format_answer(true, reg), KindMismatch);
  EXPECT_THROW(format_answer(1.0, gen), KindMismatch);
  EXPECT_EQ(format_answer(true, AnswerCodec::yes_no()), "Yes");
}

TEST(ParseReply, Examples) {
  AnswerCodec binary;
  EXPECT_EQ(parse_reply("Answer: (B)", binary), taskdata::LabelValue(true));
  EXPECT_EQ(parse_reply("(A) surely, not (B)", binary), taskdata::LabelValue(false));
  EXPECT_THROW(parse_reply("no idea", binary), Unparseable);
  AnswerCodec reg{TaskKind::kRegression, LabelRange{0, 1}};
  EXPECT_EQ(parse_reply("I think 615 is right", reg), taskdata::LabelValue(615.0));
  EXPECT_EQ(parse_reply("Answer: 057", reg), taskdata::LabelValue(57.0));
  EXPECT_EQ(parse_reply("In 2024 it was 1000", reg), taskdata::LabelValue(1000.0));
  EXPECT_EQ(parse_reply("about -3 or 2.5, say 12", reg), taskdata::LabelValue(12.0));
  EXPECT_THROW(parse_reply("no number", reg), Unparseable);
  EXPECT_THROW(parse_reply("5000", reg), Unparseable);
  AnswerCodec gen{TaskKind::kGeneration};
  EXPECT_EQ(parse_reply("Answer: x\nAnswer:  CCO \n", gen), taskdata::LabelValue(std::string("CCO")));
  EXPECT_EQ(parse_reply("  CCN ", gen), taskdata::LabelValue(std::string("CCN")));
  EXPECT_THROW(parse_reply("Answer:   ", gen), Unparseable);
  AnswerCodec yn = AnswerCodec::yes_no();
  EXPECT_EQ(parse_reply("No.", yn), taskdata::LabelValue(false));
  EXPECT_EQ(parse_reply("yes, it would", yn), taskdata::LabelValue(true));
  EXPECT_THROW(parse_reply("Nothing known", yn), Unparseable);
  try {
    parse_reply(std::string(500, 'z'), binary);
    FAIL();
  } catch (const Unparseable& e) {
    EXPECT_LE(e.excerpt().size(), 120u);
  }
}

TEST(ParseReply, InvertsFormatAnswer) {
  std::mt19937_64 rng(11);
  AnswerCodec binary;
  for (bool b : {false, true}) EXPECT_EQ(parse_reply(format_answer(b, binary), binary), taskdata::LabelValue(b));
  AnswerCodec yn = AnswerCodec::yes_no();
  for (bool b : {false, true}) EXPECT_EQ(parse_reply(format_answer(b, yn), yn), taskdata::LabelValue(b));

  const LabelRange r{-7.8, -3.5};
  AnswerCodec reg{TaskKind::kRegression, r};
  for (int bin = 0; bin <= kMaxBin; ++bin) {
    const double y = unbin_label(bin, r);
    ASSERT_EQ(bin_label(y, r), bin);
    ASSERT_EQ(parse_reply(format_answer(y, reg), reg), taskdata::LabelValue(static_cast<double>(bin)));
    ASSERT_EQ(parse_reply("Answer: " + format_answer(y, reg), reg), taskdata::LabelValue(static_cast<double>(bin)));
  }

  AnswerCodec gen{TaskKind::kGeneration};
  const std::string alphabet = "CNOScn()=#[]@+-123456789 .";
  std::uniform_int_distribution<std::size_t> len(1, 30), pick(0, alphabet.size() - 1);
  for (int trial = 0; trial < 500; ++trial) {
    std::string s;
    const std::size_t n = len(rng);
    for (std::size_t i = 0; i < n; ++i) s.push_back(alphabet[pick(rng)]);
    s = std::string(text::trim(s));
    if (s.empty()) continue;
    ASSERT_EQ(parse_reply(format_answer(s, gen), gen), taskdata::LabelValue(s));
    ASSERT_EQ(parse_reply("Answer: " + format_answer(s, gen), gen), taskdata::LabelValue(s));
  }
}

TEST(RenderPrompt, BbbZeroShotGolden) {
  auto b = bbb();
  RenderedPrompt p = render_prompt(b.spec, first_test(b), {});
  EXPECT_EQ(p.text, golden("bbb_zero_shot.txt"));
  EXPECT_EQ(p.shot_count, 0);
  EXPECT_TRUE(p.exemplar_ids.empty());
  EXPECT_EQ(p.codec.positive_choice, "(B)");
  EXPECT_EQ(p.codec.negative_choice, "(A)");
}

TEST(RenderPrompt, BbbTenShotGolden) {
  auto b = bbb();
  std::vector<DataPoint> shots;
  std::ifstream in(kFixtures / "prompts" / "bbb_10_shot_smiles.txt");
  for (std::string line; std::getline(in, line);)
    if (!line.empty()) shots.push_back(mol(line));
  ASSERT_EQ(shots.size(), 10u);
  RenderedPrompt p = render_prompt(b.spec, first_test(b), shots);
  EXPECT_EQ(p.text, golden("bbb_10_shot.txt"));
  EXPECT_EQ(p.shot_count, 10);
  EXPECT_EQ(p.exemplar_ids.size(), 10u);
  EXPECT_EQ(count_of(p.text, "Answer: "), 10u);
  EXPECT_EQ(count_of(p.text, "Answer:"), 11u);
  EXPECT_TRUE(p.text.ends_with("\n\nAnswer:"));
  EXPECT_EQ(render_prompt(b.spec, first_test(b), shots).text, p.text);

  const std::size_t i = p.text.find("Instructions:"), c = p.text.find("Context:"), q = p.text.find("Question:");
  EXPECT_EQ(i, 0u);
  EXPECT_LT(i, c);
  EXPECT_LT(c, q);
}

TEST(RenderPrompt, RegressionAndMultiFeature) {
  TaskSpec t;
  t.task_id = "dti";
  t.kind = TaskKind::kRegression;
  t.label_range = LabelRange{0, 10};
  t.instruction = "Answer the following question about drug target interactions.";
  t.context = "Binding.";
  t.feature_schema = {FeatureKind::kSmiles, FeatureKind::kAminoAcid};
  t.question_template = "Given the target amino acid and drug SMILES, predict their binding affinity.\n\n"
                        "Drug SMILES: {feature_1}\nTarget amino acid sequence: {feature_2}";
  auto point = [](std::string s, std::string seq, double y) {
    return DataPoint{{{FeatureKind::kSmiles, s}, {FeatureKind::kAminoAcid, seq}}, y, Split::kTrain};
  };
  RenderedPrompt p = render_prompt(t, point("CCO", "MKV", 0), {point("CCN", "MRV", 7.88)}, {42});
  EXPECT_EQ(p.text,
            "Instructions: Answer the following question about drug target interactions.\n\n"
            "Context: Binding.\n\n"
            "Question: Given the target amino acid and drug SMILES, predict their binding affinity.\n\n"
            "Drug SMILES: CCN\nTarget amino acid sequence: MRV\nAnswer: 788\n\n"
            "Drug SMILES: CCO\nTarget amino acid sequence: MKV\n\nAnswer:");
  EXPECT_EQ(p.exemplar_ids, (std::vector<std::size_t>{42}));
  EXPECT_THROW(render_prompt(t, mol("CCO"), {}), taskdata::SchemaMismatch);
  EXPECT_THROW(render_prompt(t, point("CCO", "MKV", 0), {point("CCN", "MRV", 1)}, {1, 2}), std::invalid_argument);
}

TEST(ChooseShots, EvalNearestOrderAndSmallPool) {
  TaskSpec t;
  t.task_id = "toy";
  t.feature_schema = {FeatureKind::kSmiles};
  t.question_template = "Q\n\nDrug SMILES: {feature_1}";
  const std::vector<std::string> smiles = {"CCCCCCO", "CCO", "c1ccccc1", "CCCO", "CCN", "OCC(O)CO"};
  std::vector<DataPoint> pool;
  for (const auto& s : smiles) pool.push_back(mol(s));
  auto idx = exemplar::ExemplarIndex::build(t, pool);

  FewShotPolicy policy;
  policy.eval_shots = 3;
  auto shots = choose_shots(policy, idx, mol("CCO"));
  // Brute-force top 3 by Tanimoto, most similar last.
  std::vector<std::pair<double, std::size_t>> ranked;
  const auto qfp = chem::morgan_fingerprint(chem::parse_smiles("CCO"));
  for (std::size_t i = 0; i < smiles.size(); ++i)
    ranked.push_back({-chem::tanimoto(qfp, chem::morgan_fingerprint(chem::parse_smiles(smiles[i]))), i});
  std::sort(ranked.begin(), ranked.end());
  EXPECT_EQ(shots, (std::vector<std::size_t>{ranked[2].second, ranked[1].second, ranked[0].second}));
  EXPECT_EQ(shots.back(), 1u);

  policy.order = ShotOrder::kNearestFirst;
  EXPECT_EQ(choose_shots(policy, idx, mol("CCO")).front(), 1u);

  auto small = exemplar::ExemplarIndex::build(t, {mol("C"), mol("CC"), mol("CCC")});
  policy.eval_shots = 10;
  EXPECT_EQ(choose_shots(policy, small, mol("CCO")).size(), 3u);
}

TEST(ChooseShots, TrainRandomSeededAndDistribution) {
  auto b = bbb();
  std::vector<DataPoint> train;
  for (const DataPoint& p : b.points)
    if (p.split == Split::kTrain) train.push_back(p);
  auto idx = exemplar::ExemplarIndex::build(b.spec, train);
  FewShotPolicy policy;
  policy.mode = ShotMode::kTrainRandom;
  policy.rng_seed = 1234;

  const DataPoint& query = train[0];
  for (std::uint64_t s = 0; s < 50; ++s) EXPECT_EQ(choose_shots(policy, idx, query, s), choose_shots(policy, idx, query, s));

  Rng rng(policy.rng_seed);
  const int draws = 10000;
  int zero = 0;
  std::array<int, 11> counts{};
  for (int d = 0; d < draws; ++d) {
    auto shots = choose_shots(policy, idx, query, rng);
    if (shots.empty()) {
      ++zero;
      continue;
    }
    ASSERT_GE(shots.size(), 1u);
    ASSERT_LE(shots.size(), 10u);
    std::set<std::size_t> uniq(shots.begin(), shots.end());
    ASSERT_EQ(uniq.size(), shots.size());
    ASSERT_FALSE(uniq.count(0));
    ++counts[shots.size()];
  }
  EXPECT_NEAR(static_cast<double>(zero) / draws, 0.70, 0.02);

  const int nonzero = draws - zero;
  const double expected = nonzero / 10.0;
  double chi2 = 0;
  for (int k = 1; k <= 10; ++k) chi2 += (counts[k] - expected) * (counts[k] - expected) / expected;
  const double critical = boost::math::quantile(boost::math::chi_squared(9), 0.999);
  EXPECT_NEAR(critical, 27.877, 1e-3);
  EXPECT_LT(chi2, critical);

  policy.zero_shot_fraction = 1.5;
  EXPECT_THROW(choose_shots(policy, idx, query), std::invalid_argument);
  policy.zero_shot_fraction = 0.7;
  policy.shot_min = 5;
  policy.shot_max = 4;
  EXPECT_THROW(choose_shots(policy, idx, query), std::invalid_argument);
}

TEST(AdversePrompt, Goldens) {
  TrialRecord trial = TrialRecord::from_json(Json::parse(golden("adverse_trial.json")));
  ASSERT_EQ(trial.adverse_event, false);
  RenderedPrompt only = render_adverse_prompt(trial, AdverseVariant::kSmilesOnly);
  EXPECT_EQ(only.text, golden("adverse_smiles_only.txt"));
  EXPECT_TRUE(only.text.ends_with("Answer:"));
  RenderedPrompt full = render_adverse_prompt(trial, AdverseVariant::kSmilesPlusText);
  EXPECT_EQ(full.text, golden("adverse_smiles_text.txt"));
  EXPECT_NE(full.text.find("Phase: 1\n"), std::string::npos);
  EXPECT_EQ(full.codec.positive_choice, "Yes");
  EXPECT_EQ(format_answer(*trial.adverse_event, full.codec), "No");

  TrialRecord no_smiles = trial;
  no_smiles.smiles.clear();
  try {
    render_adverse_prompt(no_smiles, AdverseVariant::kSmilesOnly);
    FAIL();
  } catch (const MissingField& e) {
    EXPECT_EQ(e.name(), "smiles");
  }
  TrialRecord no_phase = trial;
  no_phase.phase.clear();
  EXPECT_NO_THROW(render_adverse_prompt(no_phase, AdverseVariant::kSmilesOnly));
  EXPECT_THROW(render_adverse_prompt(no_phase, AdverseVariant::kSmilesPlusText), MissingField);
}

}  // namespace
}  // namespace txbench::promptgen

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "txbench/agent/agent.hpp"
#include "txbench/agent/scripted.hpp"

namespace txbench::agent {
namespace {

namespace fs = std::filesystem;

const fs::path kFixtures = TXBENCH_FIXTURES_DIR;
const fs::path kWorked = kFixtures / "agent" / "candidate_choice";

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::shared_ptr<llm::Client> scripted(std::vector<std::string> replies) {
  llm::EndpointConfig cfg;
  cfg.max_retries = 0;
  return std::make_shared<llm::Client>(cfg, std::make_shared<llm::SequenceTransport>(std::move(replies)));
}

std::shared_ptr<llm::Client> fixed(const std::string& reply) {
  llm::EndpointConfig cfg;
  cfg.max_retries = 0;
  return std::make_shared<llm::Client>(cfg, std::make_shared<llm::FixedMockTransport>(reply));
}

// Advances 5 ms per reading.
Clock fake_clock() {
  auto t = std::make_shared<std::chrono::steady_clock::time_point>();
  return [t] { return *t += std::chrono::milliseconds(5); };
}

ToolRegistry echo_registry() {
  ToolRegistry r;
  r.add({"Echo", "Repeats its input.", {{"text", "Text", "what to repeat"}}},
        [](const ToolInput& in) { return tools::ToolResult{"Echo", "echo: " + in.at("text")}; });
  r.add({"Fail", "Always fails.", {{"x", "X", "ignored"}}},
        [](const ToolInput&) -> tools::ToolResult { throw tools::ServiceUnavailable("backend down"); });
  return r;
}

std::shared_ptr<tools::WebTransport> tool_cassettes() {
  return std::make_shared<tools::CassetteWebTransport>(kFixtures / "tools");
}

// ---- registry

TEST(Registry, CanonicalHasEighteen) {
  ToolRegistry r = canonical_registry(std::make_shared<tools::ToolEnv>());
  EXPECT_EQ(r.size(), 18u);
  EXPECT_EQ(r.names(), tools::canonical_tool_names());
}

TEST(Registry, DuplicateAndUnknown) {
  ToolRegistry r = echo_registry();
  EXPECT_THROW(r.add({"Echo", "again", {}}, {}), DuplicateName);
  EXPECT_THROW(register_tool(r, {"", "nameless", {}}, {}), AgentError);
  EXPECT_THROW(r.find("Nope"), UnknownTool);
  register_tool(r, {"Other", "d", {}}, [](const ToolInput&) { return tools::ToolResult{"Other", "ok"}; });
  EXPECT_EQ(r.size(), 3u);
}

// ---- grammar

TEST(RouteAction, ToolAction) {
  ToolRegistry r = canonical_registry(std::make_shared<tools::ToolEnv>());
  auto a = route_action(r, "Thought: look it up\nAction: SMILES to Description\nInput SMILES: CCO\n");
  ASSERT_TRUE(std::holds_alternative<ToolAction>(a));
  const auto& act = std::get<ToolAction>(a);
  EXPECT_EQ(act.thought, "look it up");
  EXPECT_EQ(act.tool, "SMILES to Description");
  EXPECT_EQ(act.input.at("smiles"), "CCO");
}

TEST(RouteAction, NumberedLinesAndCaseInsensitiveTool) {
  ToolRegistry r = canonical_registry(std::make_shared<tools::ToolEnv>());
  auto a = route_action(r, "Thought 2: multi\nline thought\nAction 2: clinicaltox\nInput SMILES: CCO\n"
                           "Observation 2: invented by the model\nAction 3: BlastP");
  ASSERT_TRUE(std::holds_alternative<ToolAction>(a));
  EXPECT_EQ(std::get<ToolAction>(a).tool, "ClinicalTox");
  EXPECT_EQ(std::get<ToolAction>(a).thought, "multi\nline thought");
}

TEST(RouteAction, ActionInputAlias) {
  ToolRegistry r = canonical_registry(std::make_shared<tools::ToolEnv>());
  auto a = route_action(r, "Thought: t\nAction: Wikipedia Search\nAction Input: alpelisib");
  ASSERT_TRUE(std::holds_alternative<ToolAction>(a));
  EXPECT_EQ(std::get<ToolAction>(a).input.at("query"), "alpelisib");
}

TEST(RouteAction, FinalAnswer) {
  ToolRegistry r = echo_registry();
  auto a = route_action(r, "Thought: done\nFinal Answer: Candidate B is better.\nMore detail.");
  ASSERT_TRUE(std::holds_alternative<FinalAnswer>(a));
  EXPECT_EQ(std::get<FinalAnswer>(a).text, "Candidate B is better.\nMore detail.");
}

TEST(RouteAction, Correctives) {
  ToolRegistry r = echo_registry();
  auto bad = route_action(r, "I think the answer is B");
  ASSERT_TRUE(std::holds_alternative<Corrective>(bad));
  EXPECT_TRUE(std::get<Corrective>(bad).malformed);
  auto unknown = route_action(r, "Thought: t\nAction: Teleport\nInput X: 1");
  ASSERT_TRUE(std::holds_alternative<Corrective>(unknown));
  EXPECT_FALSE(std::get<Corrective>(unknown).malformed);
  EXPECT_NE(std::get<Corrective>(unknown).message.find("Echo, Fail"), std::string::npos);
  EXPECT_TRUE(std::holds_alternative<Corrective>(route_action(r, "Thought: t\nFinal Answer:   ")));
}

// ---- summarization

TEST(Summarize, ShortPassesThrough) {
  auto llm = fixed("never used");
  EXPECT_EQ(summarize_observation(llm.get(), "short", "q"), "short");
  EXPECT_EQ(llm->transport_calls(), 0u);
  EXPECT_THROW(summarize_observation(llm.get(), "", "q"), std::invalid_argument);
}

TEST(Summarize, LongUsesModel) {
  auto llm = fixed("mock summary");
  const std::string raw(1000, 'x');
  EXPECT_EQ(summarize_observation(llm.get(), raw, "q"), "mock summary");
  EXPECT_EQ(llm->transport_calls(), 1u);
  auto wordy = fixed(std::string(900, 'y'));
  EXPECT_EQ(summarize_observation(wordy.get(), raw, "q", 50).size(), 50u);
}

TEST(Summarize, FailureFallsBackToHead) {
  auto down = scripted({});
  const std::string raw = std::string(700, 'a') + "tail";
  EXPECT_EQ(summarize_observation(down.get(), raw, "q"), std::string(600, 'a'));
  EXPECT_EQ(summarize_observation(nullptr, raw, "q", 10), std::string(10, 'a'));
}

TEST(Summarize, PubChemRecordStoredAsSummary) {
  auto orch = scripted({"Thought: a\nAction: SMILES to Description\nInput SMILES: O=C(C=Cc1ccccn1)c1ccccc1",
                        "Thought: b\nFinal Answer: done"});
  auto summ = fixed("MOCK SUMMARY");
  auto env = offline_tool_env(nullptr, tool_cassettes());
  AgentOptions opt;
  opt.summarizer = summ.get();
  opt.summary_max_chars = 100;
  AgentEpisode ep = run_episode(*orch, canonical_registry(env), "q", opt);
  ASSERT_EQ(ep.steps.size(), 1u);
  EXPECT_NE(ep.steps[0].raw_observation.find("PubChem CID: 219207"), std::string::npos);
  EXPECT_EQ(ep.steps[0].summarized_observation, "MOCK SUMMARY");
}

// ---- episodes

TEST(Episode, ImmediateFinalAnswer) {
  auto orch = fixed("Thought: easy\nFinal Answer: 42");
  AgentEpisode ep = run_episode(*orch, echo_registry(), "q");
  EXPECT_TRUE(ep.steps.empty());
  EXPECT_EQ(ep.final_response, "42");
  EXPECT_EQ(ep.terminated_by, Termination::kFinalAnswer);
}

TEST(Episode, MaxStepsCap) {
  auto orch = fixed("Thought: again\nAction: Echo\nInput Text: hi");
  AgentOptions opt;
  opt.max_steps = 3;
  AgentEpisode ep = run_episode(*orch, echo_registry(), "q", opt);
  EXPECT_EQ(ep.steps.size(), 3u);
  EXPECT_EQ(ep.terminated_by, Termination::kMaxSteps);
  EXPECT_TRUE(ep.final_response.empty());
  for (int i = 0; i < 3; ++i) EXPECT_EQ(ep.steps[i].index, i + 1);
  opt.max_steps = 0;
  EXPECT_THROW(run_episode(*orch, echo_registry(), "q", opt), std::invalid_argument);
}

TEST(Episode, MalformedRetriedOnce) {
  auto orch = scripted({"gibberish", "Thought: fixed\nFinal Answer: ok"});
  AgentEpisode ep = run_episode(*orch, echo_registry(), "q");
  EXPECT_EQ(ep.final_response, "ok");
  EXPECT_EQ(orch->transport_calls(), 2u);
}

TEST(Episode, UnknownToolBecomesNote) {
  std::vector<std::string> prompts;
  auto orch = std::make_shared<llm::Client>(
      llm::EndpointConfig{}, std::make_shared<llm::FunctionTransport>([&](const auto&, const std::string& p) {
        prompts.push_back(p);
        return prompts.size() == 1 ? std::string("Thought: t\nAction: Teleport\nInput X: 1")
                                   : std::string("Thought: t\nFinal Answer: ok");
      }));
  AgentEpisode ep = run_episode(*orch, echo_registry(), "q");
  EXPECT_TRUE(ep.steps.empty());
  ASSERT_EQ(prompts.size(), 2u);
  EXPECT_NE(prompts[1].find("Note: Unknown tool 'Teleport'"), std::string::npos);
}

TEST(Episode, ToolErrorIsObservation) {
  auto orch = scripted({"Thought: t\nAction: Fail\nInput X: 1", "Thought: t\nFinal Answer: gave up"});
  AgentEpisode ep = run_episode(*orch, echo_registry(), "q");
  ASSERT_EQ(ep.steps.size(), 1u);
  EXPECT_EQ(ep.steps[0].raw_observation, "Tool error: backend down");
  EXPECT_EQ(ep.terminated_by, Termination::kFinalAnswer);
}

TEST(Episode, OrchestratorFailureTerminatesWithError) {
  auto orch = scripted({"Thought: t\nAction: Echo\nInput Text: a"});
  AgentEpisode ep = run_episode(*orch, echo_registry(), "q");
  EXPECT_EQ(ep.steps.size(), 1u);
  EXPECT_EQ(ep.terminated_by, Termination::kError);
  EXPECT_FALSE(ep.error.empty());
}

TEST(Episode, ContextGrowsMonotonically) {
  std::vector<std::string> prompts;
  int n = 0;
  auto orch = std::make_shared<llm::Client>(
      llm::EndpointConfig{}, std::make_shared<llm::FunctionTransport>([&](const auto&, const std::string& p) {
        prompts.push_back(p);
        return ++n < 4 ? "Thought: t" + std::to_string(n) + "\nAction: Echo\nInput Text: v" + std::to_string(n)
                       : std::string("Thought: t\nFinal Answer: ok");
      }));
  run_episode(*orch, echo_registry(), "q");
  ASSERT_EQ(prompts.size(), 4u);
  for (std::size_t i = 1; i < prompts.size(); ++i) {
    EXPECT_GT(prompts[i].size(), prompts[i - 1].size());
    // Everything before the closing marker carries over.
    const std::string stem = prompts[i - 1].substr(0, prompts[i - 1].rfind("\nNext block:"));
    EXPECT_EQ(prompts[i].compare(0, stem.size(), stem), 0);
  }
  EXPECT_NE(prompts[3].find("Observation 3: echo: v3"), std::string::npos);
}

TEST(Episode, LatencyWithinWall) {
  auto orch = scripted({"Thought: a\nAction: Echo\nInput Text: 1", "Thought: b\nAction: Echo\nInput Text: 2",
                        "Thought: c\nFinal Answer: ok"});
  AgentOptions opt;
  opt.clock = fake_clock();
  AgentEpisode ep = run_episode(*orch, echo_registry(), "q", opt);
  std::int64_t total = 0;
  for (const auto& s : ep.steps) {
    EXPECT_GE(s.latency_ms, 0);
    total += s.latency_ms;
  }
  EXPECT_LE(total, ep.wall_ms);
  EXPECT_GT(ep.wall_ms, 0);
}

// ---- recorded worked example

TEST(WorkedExample, CassetteMatchesScript) {
  const fs::path tmp = fs::temp_directory_path() / "txbench_worked_llm.jsonl";
  AgentOptions opt;
  opt.clock = fake_clock();
  record_episode(EpisodeScript::load(kWorked / "script.json"), tool_cassettes(), tmp, opt);
  if (std::getenv("TXBENCH_UPDATE_FIXTURES")) fs::copy_file(tmp, kWorked / "llm.jsonl", fs::copy_options::overwrite_existing);
  EXPECT_EQ(read_file(tmp), read_file(kWorked / "llm.jsonl")) << "regenerate with TXBENCH_UPDATE_FIXTURES=1";
}

AgentEpisode replay_worked(const std::optional<fs::path>& log = std::nullopt) {
  AgentOptions opt;
  opt.clock = fake_clock();
  opt.log_path = log;
  return replay_episode(EpisodeScript::load(kWorked / "script.json"), tool_cassettes(), kWorked / "llm.jsonl", opt);
}

TEST(WorkedExample, Replay) {
  AgentEpisode ep = replay_worked();
  ASSERT_EQ(ep.steps.size(), 3u);
  EXPECT_EQ(ep.steps[0].tool, "SMILES to Description");
  EXPECT_EQ(ep.steps[1].tool, "SMILES to Description");
  EXPECT_EQ(ep.steps[2].tool, "ClinicalTox");
  EXPECT_NE(ep.steps[0].raw_observation.find("XLogP: 3.8"), std::string::npos);
  EXPECT_NE(ep.steps[1].raw_observation.find("XLogP: 2.7"), std::string::npos);
  EXPECT_NE(ep.steps[2].raw_observation.find("O=C(C=Cc1ccccn1)c1ccccc1 is not toxic!"), std::string::npos);
  EXPECT_NE(ep.steps[1].summarized_observation.find("209.24 g/mol"), std::string::npos);
  EXPECT_EQ(ep.terminated_by, Termination::kFinalAnswer);
  EXPECT_EQ(ep.final_response.rfind("Candidate B is more preferable", 0), 0u);
}

TEST(WorkedExample, DeterministicUnderReplay) {
  const std::string first = replay_worked().to_json().dump();
  for (int i = 0; i < 3; ++i) EXPECT_EQ(replay_worked().to_json().dump(), first);
  const AgentEpisode back = AgentEpisode::from_json(Json::parse(first));
  EXPECT_EQ(back.steps, replay_worked().steps);
}

TEST(WorkedExample, EventLogSchema) {
  const fs::path log = fs::temp_directory_path() / "txbench_worked_events.jsonl";
  AgentEpisode ep = replay_worked(log);
  std::ifstream in(log);
  std::vector<Json> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(Json::parse(line));
  ASSERT_EQ(lines.size(), 4u);
  for (int i = 0; i < 3; ++i)
    for (const char* k : {"step", "thought", "tool", "input", "raw_obs", "summary", "latency_ms"})
      EXPECT_TRUE(lines[i].contains(k)) << k;
  EXPECT_EQ(lines[3].at("terminated_by"), "final_answer");
  EXPECT_EQ(lines[3].at("steps"), 3);
  EventLog parsed = read_event_log(log);
  ASSERT_TRUE(parsed.finished);
  EXPECT_EQ(parsed.steps, ep.steps);
}

TEST(CrashRecovery, ResumeAfterTornWrite) {
  const fs::path log = fs::temp_directory_path() / "txbench_resume.jsonl";
  const AgentEpisode full = replay_worked(log);
  // Keep the first two step lines and half of the third.
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
  EventLog partial = read_event_log(log);
  EXPECT_EQ(partial.steps.size(), 2u);
  EXPECT_FALSE(partial.finished);

  const auto script = EpisodeScript::load(kWorked / "script.json");
  auto replay = std::make_shared<llm::ReplayTransport>(kWorked / "llm.jsonl");
  llm::EndpointConfig cfg;
  cfg.max_retries = 0;
  llm::Client client(cfg, replay);
  ToolRegistry reg = canonical_registry(offline_tool_env(std::make_shared<llm::Client>(cfg, replay), tool_cassettes()));
  AgentOptions opt;
  opt.summary_max_chars = script.summary_max_chars;
  opt.clock = fake_clock();
  AgentEpisode resumed = resume_episode(client, reg, script.question, log, opt);
  ASSERT_EQ(resumed.steps.size(), 3u);
  EXPECT_EQ(resumed.final_response, full.final_response);
  for (int i = 0; i < 2; ++i) EXPECT_EQ(resumed.steps[i], full.steps[i]);
  EXPECT_EQ(resumed.steps[2].raw_observation, full.steps[2].raw_observation);
  EventLog after = read_event_log(log);
  EXPECT_EQ(after.steps.size(), 3u);
  EXPECT_TRUE(after.finished);
  EXPECT_EQ(after.valid_bytes, fs::file_size(log));
  // A finished log is not re-run.
  llm::Client dead(cfg, std::make_shared<llm::SequenceTransport>(std::vector<std::string>{}));
  EXPECT_EQ(resume_episode(dead, reg, script.question, log, opt).final_response, full.final_response);
}

// ---- usage

TEST(Usage, Stats) {
  AgentEpisode worked = replay_worked();
  AgentEpisode empty;
  empty.terminated_by = Termination::kFinalAnswer;
  UsageStats u = usage_stats({worked, empty});
  EXPECT_EQ(u.per_tool.at("SMILES to Description"), 2);
  EXPECT_EQ(u.per_tool.at("ClinicalTox"), 1);
  EXPECT_EQ(u.per_question, (std::vector<int>{3, 0}));
  EXPECT_EQ(u.max_calls, 3);
  EXPECT_LE(u.max_calls, kObservedMaxToolCalls);
  EXPECT_EQ(u.to_json().at("max_calls"), 3);
}

}  // namespace
}  // namespace txbench::agent

#include "txbench/agent/scripted.hpp"

#include <fstream>

namespace txbench::agent {

namespace {

std::vector<std::string> strings(const Json& j, const char* key) {
  return j.contains(key) ? j.at(key).get<std::vector<std::string>>() : std::vector<std::string>{};
}

Json load_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw AgentError("cannot read " + path.string());
  return Json::parse(in);
}

llm::EndpointConfig role_config(const std::string& model_id) {
  llm::EndpointConfig cfg;
  cfg.model_id = model_id;
  cfg.max_retries = 0;
  return cfg;
}

auto no_sleep = [](std::chrono::milliseconds) {};

std::shared_ptr<llm::Client> client(const std::string& model_id, std::shared_ptr<llm::Transport> t) {
  return std::make_shared<llm::Client>(role_config(model_id), std::move(t), no_sleep);
}

struct Roles {
  std::shared_ptr<llm::Client> orchestrator, summarizer, predict;
};

AgentEpisode run(const EpisodeScript& s, Roles roles, std::shared_ptr<tools::WebTransport> web,
                 AgentOptions options) {
  const ToolRegistry registry = canonical_registry(offline_tool_env(roles.predict, std::move(web)));
  options.max_steps = s.max_steps;
  options.summary_max_chars = s.summary_max_chars;
  options.summarizer = roles.summarizer.get();
  return run_episode(*roles.orchestrator, registry, s.question, options);
}

void check_consumed(const char* role, const llm::Client& c, std::size_t scripted) {
  if (c.transport_calls() != scripted)
    throw AgentError(std::string(role) + " used " + std::to_string(c.transport_calls()) + " of " +
                     std::to_string(scripted) + " scripted replies");
}

std::shared_ptr<llm::Transport> recorder(std::vector<std::string> replies, const std::filesystem::path& cassette) {
  return std::make_shared<llm::RecordingTransport>(std::make_shared<llm::SequenceTransport>(std::move(replies)),
                                                   cassette);
}

void reset_file(const std::filesystem::path& p) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream(p, std::ios::trunc);
}

}  // namespace

EpisodeScript EpisodeScript::from_json(const Json& j) {
  EpisodeScript s;
  s.question = j.at("question").get<std::string>();
  s.max_steps = j.value("max_steps", kDefaultMaxSteps);
  s.summary_max_chars = j.value("summary_max_chars", kDefaultSummaryMaxChars);
  s.orchestrator = strings(j, "orchestrator");
  s.summarizer = strings(j, "summarizer");
  s.predict = strings(j, "predict");
  return s;
}

EpisodeScript EpisodeScript::load(const std::filesystem::path& path) { return from_json(load_json(path)); }

std::vector<ScriptedToolCall> load_tool_calls(const std::filesystem::path& path) {
  std::vector<ScriptedToolCall> out;
  for (const auto& j : load_json(path)) {
    ScriptedToolCall c;
    c.tool = j.at("tool").get<std::string>();
    for (const auto& [k, v] : j.at("input").items()) c.input[k] = v.get<std::string>();
    c.predict = strings(j, "predict");
    out.push_back(std::move(c));
  }
  return out;
}

std::shared_ptr<tools::ToolEnv> offline_tool_env(std::shared_ptr<llm::Client> predict,
                                                 std::shared_ptr<tools::WebTransport> web) {
  auto env = std::make_shared<tools::ToolEnv>();
  env->predict = predict;
  env->chat = predict;
  env->web = std::make_shared<tools::ServiceClient>(std::move(web), std::make_shared<tools::HostRateLimiter>(1e9, 1e9),
                                                    no_sleep);
  env->sleeper = no_sleep;
  return env;
}

AgentEpisode record_episode(const EpisodeScript& script, std::shared_ptr<tools::WebTransport> web,
                            const std::filesystem::path& cassette, AgentOptions options) {
  reset_file(cassette);
  Roles roles{client("orchestrator", recorder(script.orchestrator, cassette)),
              client("summarizer", recorder(script.summarizer, cassette)),
              client("predict", recorder(script.predict, cassette))};
  AgentEpisode ep = run(script, roles, std::move(web), std::move(options));
  check_consumed("orchestrator", *roles.orchestrator, script.orchestrator.size());
  check_consumed("summarizer", *roles.summarizer, script.summarizer.size());
  check_consumed("predict", *roles.predict, script.predict.size());
  return ep;
}

AgentEpisode AgentRuntime::run(const std::string& question, AgentOptions overrides) const {
  if (!orchestrator || !registry) throw AgentError("agent runtime is incomplete");
  overrides.max_steps = options.max_steps;
  overrides.summary_max_chars = options.summary_max_chars;
  overrides.summarizer = summarizer ? summarizer.get() : options.summarizer;
  return run_episode(*orchestrator, *registry, question, overrides);
}

AgentRuntime replay_runtime(const EpisodeScript& script, std::shared_ptr<tools::WebTransport> web,
                            const std::filesystem::path& cassette) {
  auto replay = std::make_shared<llm::ReplayTransport>(cassette);
  AgentRuntime rt;
  rt.orchestrator = client("orchestrator", replay);
  rt.summarizer = client("summarizer", replay);
  rt.registry = std::make_shared<const ToolRegistry>(
      canonical_registry(offline_tool_env(client("predict", replay), std::move(web))));
  rt.options.max_steps = script.max_steps;
  rt.options.summary_max_chars = script.summary_max_chars;
  return rt;
}

AgentEpisode replay_episode(const EpisodeScript& script, std::shared_ptr<tools::WebTransport> web,
                            const std::filesystem::path& cassette, AgentOptions options) {
  return replay_runtime(script, std::move(web), cassette).run(script.question, std::move(options));
}

std::vector<tools::ToolResult> record_tool_calls(const std::vector<ScriptedToolCall>& calls,
                                                 std::shared_ptr<tools::WebTransport> web,
                                                 const std::filesystem::path& cassette) {
  reset_file(cassette);
  std::vector<tools::ToolResult> out;
  for (const auto& c : calls) {
    auto predict = client("predict", recorder(c.predict, cassette));
    const ToolRegistry registry = canonical_registry(offline_tool_env(predict, web));
    out.push_back(registry.find(c.tool).handler(c.input));
    check_consumed(c.tool.c_str(), *predict, c.predict.size());
  }
  return out;
}

}  // namespace txbench::agent

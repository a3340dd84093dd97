#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "txbench/agent/agent.hpp"

namespace txbench::agent {

// A scripted agent run: the replies each model role gives, in call order.
// Recording a script produces one prompt-hash cassette that replays the run
// with the real prompts.
struct EpisodeScript {
  std::string question;
  int max_steps = kDefaultMaxSteps;
  std::size_t summary_max_chars = kDefaultSummaryMaxChars;
  std::vector<std::string> orchestrator;
  std::vector<std::string> summarizer;
  std::vector<std::string> predict;

  static EpisodeScript from_json(const Json& j);
  static EpisodeScript load(const std::filesystem::path& path);
};

// One direct tool invocation with the model replies it consumes.
struct ScriptedToolCall {
  std::string tool;
  ToolInput input;
  std::vector<std::string> predict;
};

std::vector<ScriptedToolCall> load_tool_calls(const std::filesystem::path& path);

// Tool environment over `web` with no real sleeping between retries or polls.
std::shared_ptr<tools::ToolEnv> offline_tool_env(std::shared_ptr<llm::Client> predict,
                                                 std::shared_ptr<tools::WebTransport> web);

// Everything needed to run one episode. The service builds one per message.
struct AgentRuntime {
  std::shared_ptr<llm::Client> orchestrator;
  // Optional separate summarization model.
  std::shared_ptr<llm::Client> summarizer;
  std::shared_ptr<const ToolRegistry> registry;
  AgentOptions options;

  AgentEpisode run(const std::string& question, AgentOptions overrides) const;
};

// Runtime whose models are all served from a cassette recorded with
// record_episode; tools replay HTTP from `web`.
AgentRuntime replay_runtime(const EpisodeScript& script, std::shared_ptr<tools::WebTransport> web,
                            const std::filesystem::path& cassette);

// Run the script and write its cassette (replacing any existing file). Throws
// AgentError when the run does not consume every scripted reply.
AgentEpisode record_episode(const EpisodeScript& script, std::shared_ptr<tools::WebTransport> web,
                            const std::filesystem::path& cassette, AgentOptions options = {});

// Same run, served from the cassette.
AgentEpisode replay_episode(const EpisodeScript& script, std::shared_ptr<tools::WebTransport> web,
                            const std::filesystem::path& cassette, AgentOptions options = {});

std::vector<tools::ToolResult> record_tool_calls(const std::vector<ScriptedToolCall>& calls,
                                                 std::shared_ptr<tools::WebTransport> web,
                                                 const std::filesystem::path& cassette);

}  // namespace txbench::agent

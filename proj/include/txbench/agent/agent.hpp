#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "txbench/common/json.hpp"
#include "txbench/llmclient/client.hpp"
#include "txbench/tools/tools.hpp"

namespace txbench::agent {

using tools::ToolDescriptor;
using tools::ToolHandler;
using tools::ToolInput;

class AgentError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DuplicateName : public AgentError {
 public:
  explicit DuplicateName(const std::string& name) : AgentError("tool already registered: " + name) {}
};

class UnknownTool : public AgentError {
 public:
  explicit UnknownTool(const std::string& name) : AgentError("unknown tool: " + name) {}
};

class ToolRegistry {
 public:
  void add(ToolDescriptor descriptor, ToolHandler handler);
  const tools::ToolBinding& find(std::string_view name) const;
  bool contains(std::string_view name) const;
  std::size_t size() const { return tools_.size(); }
  std::vector<std::string> names() const;
  // Registration order.
  const std::vector<tools::ToolBinding>& bindings() const { return tools_; }

 private:
  std::vector<tools::ToolBinding> tools_;
};

ToolRegistry& register_tool(ToolRegistry& registry, ToolDescriptor descriptor, ToolHandler handler);
ToolRegistry canonical_registry(std::shared_ptr<const tools::ToolEnv> env);

// ---- action grammar
//
//   Thought: <text>
//   Action: <tool name>
//   Input <field label>: <value>      (repeatable; continuation lines append)
// or
//   Thought: <text>
//   Final Answer: <text>              (runs to the end of the reply)
//
// Step numbers after Thought/Action are accepted ("Action 2:"). Anything from
// an "Observation" line on is ignored.

struct ToolAction {
  std::string thought;
  std::string tool;
  ToolInput input;
};

struct FinalAnswer {
  std::string thought;
  std::string text;
};

// Fed back to the orchestrator instead of raising. `malformed` replies get
// one corrective retry; unknown tools become an observation note.
struct Corrective {
  std::string thought;
  std::string message;
  bool malformed = true;
};

using RoutedAction = std::variant<ToolAction, FinalAnswer, Corrective>;

RoutedAction route_action(const ToolRegistry& registry, std::string_view orchestrator_text);

// ---- episodes

enum class Termination { kFinalAnswer, kMaxSteps, kError };
std::string_view to_string(Termination t);
Termination parse_termination(std::string_view s);

struct AgentStep {
  int index = 0;
  std::string thought;
  std::string tool;
  ToolInput input;
  std::string raw_observation;
  std::string summarized_observation;
  std::int64_t latency_ms = 0;

  // {step, thought, tool, input, raw_obs, summary, latency_ms}
  OrderedJson to_event() const;
  static AgentStep from_event(const Json& j);
  friend bool operator==(const AgentStep&, const AgentStep&) = default;
};

struct AgentEpisode {
  std::string question;
  std::vector<AgentStep> steps;
  std::string final_response;
  Termination terminated_by = Termination::kMaxSteps;
  std::string error;
  std::int64_t wall_ms = 0;

  OrderedJson to_json() const;
  static AgentEpisode from_json(const Json& j);
  // Terminal line of the event log and the service stream.
  OrderedJson final_event() const;
};

inline constexpr std::size_t kDefaultSummaryMaxChars = 600;
inline constexpr int kDefaultMaxSteps = 10;

// Raw text up to `max_chars` passes through unchanged. Longer text goes through
// a fixed summarization prompt; if the model fails or returns nothing, the
// head of the raw text is used.
std::string summarize_observation(llm::Client* llm, const std::string& raw, const std::string& question,
                                  std::size_t max_chars = kDefaultSummaryMaxChars);
std::string summarization_prompt(const std::string& raw, const std::string& question, std::size_t max_chars);

using Clock = std::function<std::chrono::steady_clock::time_point()>;

struct AgentOptions {
  int max_steps = kDefaultMaxSteps;
  std::size_t summary_max_chars = kDefaultSummaryMaxChars;
  // Separate summarization model; the orchestrator is used when null.
  llm::Client* summarizer = nullptr;
  Clock clock = [] { return std::chrono::steady_clock::now(); };
  // JSON-lines event log. Each step is appended and flushed before the next
  // one begins.
  std::optional<std::filesystem::path> log_path;
  std::function<void(const AgentStep&)> on_step;
};

// The full orchestrator prompt for the next turn.
std::string orchestrator_prompt(const ToolRegistry& registry, const std::string& question,
                                const std::vector<AgentStep>& steps, const std::vector<std::string>& notes);

AgentEpisode run_episode(llm::Client& llm, const ToolRegistry& registry, const std::string& question,
                         const AgentOptions& options = {});

struct EventLog {
  std::vector<AgentStep> steps;
  std::optional<AgentEpisode> finished;
  // Bytes of complete, parseable lines. A torn final line is excluded.
  std::size_t valid_bytes = 0;
};

EventLog read_event_log(const std::filesystem::path& path);

// Continues an interrupted episode from its event log, appending to it. A
// finished log is returned as is.
AgentEpisode resume_episode(llm::Client& llm, const ToolRegistry& registry, const std::string& question,
                            const std::filesystem::path& log_path, AgentOptions options = {});

struct UsageStats {
  std::map<std::string, int> per_tool;
  std::vector<int> per_question;
  int max_calls = 0;

  Json to_json() const;
};

UsageStats usage_stats(const std::vector<AgentEpisode>& episodes);

// Upper bound on tool calls per question observed in the reference runs.
inline constexpr int kObservedMaxToolCalls = 8;

}  // namespace txbench::agent

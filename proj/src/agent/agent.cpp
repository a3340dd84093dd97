#include "txbench/agent/agent.hpp"

#include <algorithm>
#include <fstream>
#include <regex>

#include "txbench/common/text.hpp"

namespace txbench::agent {

// ---- registry

void ToolRegistry::add(ToolDescriptor descriptor, ToolHandler handler) {
  if (descriptor.name.empty()) throw AgentError("tool name must not be empty");
  if (contains(descriptor.name)) throw DuplicateName(descriptor.name);
  tools_.push_back({std::move(descriptor), std::move(handler)});
}

const tools::ToolBinding& ToolRegistry::find(std::string_view name) const {
  for (const auto& t : tools_)
    if (t.descriptor.name == name) return t;
  throw UnknownTool(std::string(name));
}

bool ToolRegistry::contains(std::string_view name) const {
  return std::any_of(tools_.begin(), tools_.end(), [&](const auto& t) { return t.descriptor.name == name; });
}

std::vector<std::string> ToolRegistry::names() const {
  std::vector<std::string> out;
  for (const auto& t : tools_) out.push_back(t.descriptor.name);
  return out;
}

ToolRegistry& register_tool(ToolRegistry& registry, ToolDescriptor descriptor, ToolHandler handler) {
  registry.add(std::move(descriptor), std::move(handler));
  return registry;
}

ToolRegistry canonical_registry(std::shared_ptr<const tools::ToolEnv> env) {
  ToolRegistry r;
  for (auto& b : tools::canonical_tools(std::move(env))) r.add(std::move(b.descriptor), std::move(b.handler));
  return r;
}

// ---- grammar

namespace {

std::string tool_list(const ToolRegistry& registry) {
  std::string out;
  for (const auto& name : registry.names()) out += (out.empty() ? "" : ", ") + name;
  return out;
}

std::string resolve_tool(const ToolRegistry& registry, const std::string& name) {
  if (registry.contains(name)) return name;
  for (const auto& n : registry.names())
    if (text::to_lower(n) == text::to_lower(name)) return n;
  return {};
}

std::string field_key(const ToolDescriptor& d, const std::string& label) {
  const std::string l = text::to_lower(label);
  for (const auto& f : d.input_schema)
    if (text::to_lower(f.label) == l || f.key == l) return f.key;
  return l;
}

std::string generic_key(const ToolDescriptor& d) {
  std::vector<std::string> required;
  for (const auto& f : d.input_schema)
    if (f.required) required.push_back(f.key);
  if (required.size() == 1) return required[0];
  if (d.input_schema.size() == 1) return d.input_schema[0].key;
  return "input";
}

}  // namespace

RoutedAction route_action(const ToolRegistry& registry, std::string_view reply) {
  static const std::regex observation_re(R"(^\s*Observation\b.*)", std::regex::icase);
  static const std::regex thought_re(R"(^\s*Thought(?:\s*\d+)?\s*:\s?(.*)$)", std::regex::icase);
  static const std::regex final_re(R"(^\s*Final Answer\s*:\s?(.*)$)", std::regex::icase);
  static const std::regex action_input_re(R"(^\s*Action Input(?:\s*\d+)?\s*:\s?(.*)$)", std::regex::icase);
  static const std::regex action_re(R"(^\s*Action(?:\s*\d+)?\s*:\s*(.*)$)", std::regex::icase);
  static const std::regex input_re(R"(^\s*Input\s+([^:]+?)\s*:\s?(.*)$)", std::regex::icase);

  enum class Cur { kNone, kThought, kInput, kFinal };
  Cur cur = Cur::kNone;
  std::string thought, action, final_text, generic_input;
  bool has_final = false, has_action = false, has_generic = false;
  std::vector<std::pair<std::string, std::string>> inputs;

  for (std::string line : text::split(reply, '\n')) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::smatch m;
    if (cur == Cur::kFinal) {
      final_text += "\n" + line;
      continue;
    }
    if (std::regex_match(line, observation_re)) break;
    if (std::regex_match(line, m, thought_re)) {
      if (has_action) break;
      thought = m[1].str();
      cur = Cur::kThought;
    } else if (std::regex_match(line, m, final_re)) {
      if (has_action) break;
      has_final = true;
      final_text = m[1].str();
      cur = Cur::kFinal;
    } else if (std::regex_match(line, m, action_input_re)) {
      has_generic = true;
      generic_input = m[1].str();
      cur = Cur::kNone;
    } else if (std::regex_match(line, m, action_re)) {
      if (has_action) break;
      has_action = true;
      action = std::string(text::trim(m[1].str()));
      cur = Cur::kNone;
    } else if (std::regex_match(line, m, input_re)) {
      inputs.emplace_back(m[1].str(), m[2].str());
      cur = Cur::kInput;
    } else if (cur == Cur::kThought) {
      thought += "\n" + line;
    } else if (cur == Cur::kInput) {
      inputs.back().second += "\n" + line;
    }
  }
  thought = std::string(text::trim(thought));

  if (has_final && !has_action) {
    std::string t(text::trim(final_text));
    if (t.empty()) return Corrective{thought, "the Final Answer line is empty", true};
    return FinalAnswer{thought, t};
  }
  if (!has_action || action.empty())
    return Corrective{thought, "no Action or Final Answer line was found", true};

  const std::string tool = resolve_tool(registry, action);
  if (tool.empty())
    return Corrective{thought, "Unknown tool '" + action + "'. Available tools: " + tool_list(registry) + ".", false};
  const ToolDescriptor& d = registry.find(tool).descriptor;
  ToolAction out{thought, tool, {}};
  for (const auto& [label, value] : inputs) out.input[field_key(d, std::string(text::trim(label)))] = text::trim(value);
  if (has_generic && !generic_input.empty()) out.input.emplace(generic_key(d), text::trim(generic_input));
  return out;
}

// ---- episode types

std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::kFinalAnswer: return "final_answer";
    case Termination::kMaxSteps: return "max_steps";
    case Termination::kError: return "error";
  }
  return "?";
}

Termination parse_termination(std::string_view s) {
  if (s == "final_answer") return Termination::kFinalAnswer;
  if (s == "max_steps") return Termination::kMaxSteps;
  if (s == "error") return Termination::kError;
  throw AgentError("unknown termination '" + std::string(s) + "'");
}

OrderedJson AgentStep::to_event() const {
  OrderedJson in = OrderedJson::object();
  for (const auto& [k, v] : input) in[k] = v;
  return OrderedJson{{"step", index},   {"thought", thought},         {"tool", tool},
                     {"input", in},     {"raw_obs", raw_observation}, {"summary", summarized_observation},
                     {"latency_ms", latency_ms}};
}

AgentStep AgentStep::from_event(const Json& j) {
  AgentStep s;
  s.index = j.at("step").get<int>();
  s.thought = j.at("thought").get<std::string>();
  s.tool = j.at("tool").get<std::string>();
  for (const auto& [k, v] : j.at("input").items()) s.input[k] = v.get<std::string>();
  s.raw_observation = j.at("raw_obs").get<std::string>();
  s.summarized_observation = j.at("summary").get<std::string>();
  s.latency_ms = j.at("latency_ms").get<std::int64_t>();
  return s;
}

OrderedJson AgentEpisode::final_event() const {
  OrderedJson j{{"final", final_response},
                {"terminated_by", to_string(terminated_by)},
                {"steps", steps.size()},
                {"wall_ms", wall_ms}};
  if (!error.empty()) j["error"] = error;
  return j;
}

OrderedJson AgentEpisode::to_json() const {
  OrderedJson s = OrderedJson::array();
  for (const auto& st : steps) s.push_back(st.to_event());
  return OrderedJson{{"question", question},
                     {"steps", s},
                     {"final_response", final_response},
                     {"terminated_by", to_string(terminated_by)},
                     {"error", error},
                     {"wall_ms", wall_ms}};
}

AgentEpisode AgentEpisode::from_json(const Json& j) {
  AgentEpisode e;
  e.question = j.at("question").get<std::string>();
  for (const auto& s : j.at("steps")) e.steps.push_back(AgentStep::from_event(s));
  e.final_response = j.value("final_response", std::string{});
  e.terminated_by = parse_termination(j.at("terminated_by").get<std::string>());
  e.error = j.value("error", std::string{});
  e.wall_ms = j.value("wall_ms", std::int64_t{0});
  return e;
}

// ---- summarization

std::string summarization_prompt(const std::string& raw, const std::string& question, std::size_t max_chars) {
  return "Summarize the tool output below in at most " + std::to_string(max_chars) +
         " characters. Keep only facts that help answer the question and do not add new information.\n\n"
         "Question: " + question + "\n\nTool output:\n" + raw + "\n\nSummary:";
}

namespace {

std::string head(const std::string& s, std::size_t n) {
  if (s.size() <= n) return s;
  std::size_t cut = n;
  while (cut > 0 && (static_cast<unsigned char>(s[cut]) & 0xC0) == 0x80) --cut;
  return s.substr(0, cut);
}

}  // namespace

std::string summarize_observation(llm::Client* llm, const std::string& raw, const std::string& question,
                                  std::size_t max_chars) {
  if (raw.empty()) throw std::invalid_argument("observation to summarize is empty");
  if (raw.size() <= max_chars) return raw;
  if (llm) {
    try {
      std::string s(text::trim(llm->generate(summarization_prompt(raw, question, max_chars))));
      if (!s.empty()) return head(s, max_chars);
    } catch (const llm::LlmError&) {
    }
  }
  return head(raw, max_chars);
}

// ---- orchestrator

std::string orchestrator_prompt(const ToolRegistry& registry, const std::string& question,
                                const std::vector<AgentStep>& steps, const std::vector<std::string>& notes) {
  std::string p =
      "You are a therapeutics research assistant. Answer the question by reasoning step by step and calling "
      "tools when they help.\n\nTools:\n";
  for (const auto& b : registry.bindings()) {
    p += "- " + b.descriptor.name + ": " + b.descriptor.description;
    if (!b.descriptor.input_schema.empty()) {
      p += " Inputs:";
      bool first = true;
      for (const auto& f : b.descriptor.input_schema) {
        p += std::string(first ? " " : "; ") + f.label + " (" + f.doc + (f.required ? "" : ", optional") + ")";
        first = false;
      }
      p += ".";
    }
    p += "\n";
  }
  p +=
      "\nReply with exactly one block in this format:\n"
      "Thought: <your reasoning about what to do next>\n"
      "Action: <tool name>\n"
      "Input <input name>: <value>\n"
      "When you can answer the question, reply instead with:\n"
      "Thought: <your reasoning>\n"
      "Final Answer: <the answer for the user>\n\n"
      "Question: " + question + "\n";
  for (const AgentStep& s : steps) {
    const std::string n = std::to_string(s.index);
    p += "\nThought " + n + ": " + s.thought + "\nAction " + n + ": " + s.tool + "\n";
    const ToolDescriptor* d = registry.contains(s.tool) ? &registry.find(s.tool).descriptor : nullptr;
    for (const auto& [k, v] : s.input) {
      std::string label = k;
      if (d)
        for (const auto& f : d->input_schema)
          if (f.key == k) label = f.label;
      p += "Input " + label + ": " + v + "\n";
    }
    p += "Observation " + n + ": " + s.summarized_observation + "\n";
  }
  for (const auto& note : notes) p += "\nNote: " + note + "\n";
  p += "\nNext block:";
  return p;
}

namespace {

class LogWriter {
 public:
  explicit LogWriter(const std::optional<std::filesystem::path>& path, bool append) {
    if (!path) return;
    if (path->has_parent_path()) std::filesystem::create_directories(path->parent_path());
    out_.open(*path, append ? std::ios::app : std::ios::trunc);
    if (!out_) throw AgentError("cannot open event log " + path->string());
  }
  void write(const OrderedJson& event) {
    if (!out_.is_open()) return;
    out_ << event.dump() << '\n';
    out_.flush();
  }

 private:
  std::ofstream out_;
};

std::int64_t elapsed_ms(std::chrono::steady_clock::time_point a, std::chrono::steady_clock::time_point b) {
  return std::chrono::duration_cast<std::chrono::milliseconds>(b - a).count();
}

void continue_episode(llm::Client& llm, const ToolRegistry& registry, AgentEpisode& ep, const AgentOptions& opt,
                      LogWriter& log) {
  if (opt.max_steps < 1) throw std::invalid_argument("max_steps must be at least 1");
  const auto start = opt.clock();
  llm::Client* summarizer = opt.summarizer ? opt.summarizer : &llm;
  std::vector<std::string> notes;
  ep.terminated_by = Termination::kMaxSteps;

  for (int turn = static_cast<int>(ep.steps.size()); turn < opt.max_steps; ++turn) {
    const std::string prompt = orchestrator_prompt(registry, ep.question, ep.steps, notes);
    RoutedAction routed;
    try {
      routed = route_action(registry, llm.generate(prompt));
      if (auto* c = std::get_if<Corrective>(&routed); c && c->malformed) {
        const std::string retry = prompt + "\n\nSystem note: your previous reply could not be parsed (" + c->message +
                                  "). Reply with a Thought line followed by either an Action line and Input "
                                  "lines, or a Final Answer line.";
        routed = route_action(registry, llm.generate(retry));
      }
    } catch (const llm::LlmError& e) {
      ep.terminated_by = Termination::kError;
      ep.error = e.what();
      break;
    }

    if (auto* f = std::get_if<FinalAnswer>(&routed)) {
      ep.final_response = f->text;
      ep.terminated_by = Termination::kFinalAnswer;
      break;
    }
    if (auto* c = std::get_if<Corrective>(&routed)) {
      notes.push_back(c->malformed ? "Your reply could not be parsed (" + c->message + ")." : c->message);
      continue;
    }
    const auto& act = std::get<ToolAction>(routed);
    AgentStep step;
    step.index = static_cast<int>(ep.steps.size()) + 1;
    step.thought = act.thought;
    step.tool = act.tool;
    step.input = act.input;
    const auto t0 = opt.clock();
    try {
      step.raw_observation = registry.find(act.tool).handler(act.input).text;
    } catch (const std::exception& e) {
      step.raw_observation = std::string("Tool error: ") + e.what();
    }
    step.latency_ms = elapsed_ms(t0, opt.clock());
    if (step.raw_observation.empty()) step.raw_observation = "(empty tool output)";
    step.summarized_observation =
        summarize_observation(summarizer, step.raw_observation, ep.question, opt.summary_max_chars);
    ep.steps.push_back(step);
    log.write(step.to_event());
    if (opt.on_step) opt.on_step(step);
  }
  ep.wall_ms += elapsed_ms(start, opt.clock());
  log.write(ep.final_event());
}

}  // namespace

AgentEpisode run_episode(llm::Client& llm, const ToolRegistry& registry, const std::string& question,
                         const AgentOptions& options) {
  if (options.max_steps < 1) throw std::invalid_argument("max_steps must be at least 1");
  AgentEpisode ep;
  ep.question = question;
  LogWriter log(options.log_path, false);
  continue_episode(llm, registry, ep, options, log);
  return ep;
}

EventLog read_event_log(const std::filesystem::path& path) {
  EventLog out;
  std::ifstream in(path, std::ios::binary);
  if (!in) return out;
  const std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::size_t pos = 0;
  while (pos < data.size()) {
    const std::size_t nl = data.find('\n', pos);
    if (nl == std::string::npos) break;
    Json j;
    try {
      j = Json::parse(data.substr(pos, nl - pos));
    } catch (const Json::exception&) {
      break;
    }
    if (j.contains("final")) {
      AgentEpisode ep;
      ep.steps = out.steps;
      ep.final_response = j.at("final").get<std::string>();
      ep.terminated_by = parse_termination(j.at("terminated_by").get<std::string>());
      ep.error = j.value("error", std::string{});
      ep.wall_ms = j.value("wall_ms", std::int64_t{0});
      out.finished = ep;
    } else {
      try {
        out.steps.push_back(AgentStep::from_event(j));
      } catch (const Json::exception&) {
        break;
      }
    }
    pos = nl + 1;
    out.valid_bytes = pos;
    if (out.finished) break;
  }
  return out;
}

AgentEpisode resume_episode(llm::Client& llm, const ToolRegistry& registry, const std::string& question,
                            const std::filesystem::path& log_path, AgentOptions options) {
  EventLog prior = read_event_log(log_path);
  if (prior.finished) {
    prior.finished->question = question;
    return *prior.finished;
  }
  for (std::size_t i = 0; i < prior.steps.size(); ++i)
    if (prior.steps[i].index != static_cast<int>(i) + 1) throw AgentError("event log steps are out of order");
  if (std::filesystem::exists(log_path)) std::filesystem::resize_file(log_path, prior.valid_bytes);
  AgentEpisode ep;
  ep.question = question;
  ep.steps = std::move(prior.steps);
  options.log_path = log_path;
  LogWriter log(options.log_path, true);
  continue_episode(llm, registry, ep, options, log);
  return ep;
}

// ---- usage

Json UsageStats::to_json() const {
  return {{"per_tool", per_tool}, {"per_question", per_question}, {"max_calls", max_calls}};
}

UsageStats usage_stats(const std::vector<AgentEpisode>& episodes) {
  UsageStats u;
  for (const auto& ep : episodes) {
    for (const auto& s : ep.steps) ++u.per_tool[s.tool];
    const int n = static_cast<int>(ep.steps.size());
    u.per_question.push_back(n);
    u.max_calls = std::max(u.max_calls, n);
  }
  return u;
}

}  // namespace txbench::agent

#include "txbench/promptgen/prompt.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <numeric>

#include "txbench/common/text.hpp"

namespace txbench::promptgen {

using taskdata::DataPoint;
using taskdata::TaskSpec;

namespace {

constexpr std::size_t kExcerptMax = 120;

void check_range(const LabelRange& r) {
  if (!(r.min < r.max)) throw DegenerateRange();
}

std::vector<std::string> paragraphs(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t p = s.find("\n\n", start);
    if (p == std::string_view::npos) {
      out.emplace_back(s.substr(start));
      return out;
    }
    out.emplace_back(s.substr(start, p - start));
    start = p + 2;
  }
}

bool has_placeholder(const std::string& para) { return para.find("{feature_") != std::string::npos; }

bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

// Position of `choice` in `reply`. Alphabetic choices ("Yes") match whole
// words, case-insensitively; symbolic ones ("(B)") match literally.
std::size_t find_choice(std::string_view reply, std::string_view choice) {
  if (choice.empty()) return std::string_view::npos;
  const bool wordlike = is_word_char(choice.front()) && is_word_char(choice.back());
  if (!wordlike) return reply.find(choice);
  const std::string lower_reply = text::to_lower(reply);
  const std::string lower_choice = text::to_lower(choice);
  std::size_t pos = 0;
  while ((pos = lower_reply.find(lower_choice, pos)) != std::string::npos) {
    const bool left_ok = pos == 0 || !is_word_char(lower_reply[pos - 1]);
    const std::size_t end = pos + lower_choice.size();
    const bool right_ok = end == lower_reply.size() || !is_word_char(lower_reply[end]);
    if (left_ok && right_ok) return pos;
    ++pos;
  }
  return std::string_view::npos;
}

// First standalone integer token in [0, 1000]. Signed or fractional numbers
// are skipped whole.
std::optional<int> first_bin_token(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size()) {
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) {
      ++i;
      continue;
    }
    const std::size_t start = i;
    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
    const bool negative = start > 0 && s[start - 1] == '-';
    const bool glued = start > 0 && (std::isalpha(static_cast<unsigned char>(s[start - 1])) || s[start - 1] == '.');
    bool fractional = false;
    if (i + 1 < s.size() && s[i] == '.' && std::isdigit(static_cast<unsigned char>(s[i + 1]))) {
      fractional = true;
      ++i;
      while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
    }
    const bool trailing_alpha = i < s.size() && std::isalpha(static_cast<unsigned char>(s[i]));
    if (negative || glued || fractional || trailing_alpha) continue;
    const std::string_view digits = s.substr(start, i - start);
    if (digits.size() > 4) continue;
    int v = 0;
    std::from_chars(digits.data(), digits.data() + digits.size(), v);
    if (v >= 0 && v <= kMaxBin) return v;
  }
  return std::nullopt;
}

const std::string& require(const std::string& value, const char* name) {
  if (text::trim(value).empty()) throw MissingField(name);
  return value;
}

std::string optional_field(const Json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return {};
  const Json& v = j.at(key);
  return v.is_string() ? v.get<std::string>() : v.dump();
}

}  // namespace

Unparseable::Unparseable(std::string_view reply)
    : PromptError("unparseable reply: " + std::string(reply.substr(0, kExcerptMax))),
      excerpt_(reply.substr(0, kExcerptMax)) {}

AnswerCodec AnswerCodec::for_task(const TaskSpec& task) {
  AnswerCodec c;
  c.kind = task.kind;
  c.label_range = task.label_range;
  if (c.kind == TaskKind::kRegression) {
    if (!c.label_range) throw PromptError("regression task '" + task.task_id + "' has no label range");
    check_range(*c.label_range);
  }
  return c;
}

AnswerCodec AnswerCodec::yes_no() {
  AnswerCodec c;
  c.kind = TaskKind::kBinary;
  c.positive_choice = "Yes";
  c.negative_choice = "No";
  return c;
}

int bin_label(double y, const LabelRange& range) {
  check_range(range);
  if (std::isnan(y)) throw std::invalid_argument("cannot bin NaN");
  const double t = std::clamp((y - range.min) / (range.max - range.min), 0.0, 1.0);
  return static_cast<int>(std::floor(1000.0 * t + 0.5));
}

double unbin_label(int bin, const LabelRange& range) {
  check_range(range);
  if (bin < 0 || bin > kMaxBin) throw OutOfRangeBin(bin);
  if (bin == kMaxBin) return range.max;
  return range.min + (static_cast<double>(bin) / 1000.0) * (range.max - range.min);
}

std::string format_bin(int bin) {
  if (bin < 0 || bin > kMaxBin) throw OutOfRangeBin(bin);
  std::string s = std::to_string(bin);
  if (s.size() < 3) s.insert(0, 3 - s.size(), '0');
  return s;
}

std::string format_answer(const LabelValue& label, const AnswerCodec& codec) {
  switch (codec.kind) {
    case TaskKind::kBinary:
      if (const bool* b = std::get_if<bool>(&label)) return *b ? codec.positive_choice : codec.negative_choice;
      throw KindMismatch("binary codec needs a boolean label");
    case TaskKind::kRegression:
      if (const double* y = std::get_if<double>(&label)) {
        if (!codec.label_range) throw PromptError("regression codec has no label range");
        return format_bin(bin_label(*y, *codec.label_range));
      }
      throw KindMismatch("regression codec needs a numeric label");
    case TaskKind::kGeneration:
      if (const std::string* s = std::get_if<std::string>(&label)) return *s;
      throw KindMismatch("generation codec needs a string label");
  }
  throw KindMismatch("unknown codec kind");
}

LabelValue parse_reply(std::string_view reply, const AnswerCodec& codec) {
  switch (codec.kind) {
    case TaskKind::kBinary: {
      const std::size_t pos = find_choice(reply, codec.positive_choice);
      const std::size_t neg = find_choice(reply, codec.negative_choice);
      if (pos == std::string_view::npos && neg == std::string_view::npos) throw Unparseable(reply);
      return pos < neg;
    }
    case TaskKind::kRegression: {
      if (auto v = first_bin_token(reply)) return static_cast<double>(*v);
      throw Unparseable(reply);
    }
    case TaskKind::kGeneration: {
      std::string_view body = reply;
      const std::size_t at = reply.rfind("Answer:");
      if (at != std::string_view::npos) body = reply.substr(at + 7);
      body = text::trim(body);
      if (body.empty()) throw Unparseable(reply);
      return std::string(body);
    }
  }
  throw Unparseable(reply);
}

std::string question_header(const TaskSpec& task) {
  std::string out;
  for (const std::string& p : paragraphs(task.question_template)) {
    if (has_placeholder(p)) continue;
    if (!out.empty()) out += "\n\n";
    out += p;
  }
  return out;
}

std::string feature_block(const TaskSpec& task, const DataPoint& point) {
  taskdata::check_point(task, point, 0);
  std::string out;
  for (std::string p : paragraphs(task.question_template)) {
    if (!has_placeholder(p)) continue;
    for (std::size_t i = 0; i < point.features.size(); ++i) {
      const std::string ph = taskdata::placeholder(i);
      const std::size_t at = p.find(ph);
      if (at != std::string::npos) p.replace(at, ph.size(), point.features[i].value);
    }
    if (!out.empty()) out += "\n\n";
    out += p;
  }
  return out;
}

RenderedPrompt render_prompt(const TaskSpec& task, const DataPoint& point, const std::vector<DataPoint>& shots,
                             std::vector<std::size_t> exemplar_ids) {
  if (exemplar_ids.empty()) {
    exemplar_ids.resize(shots.size());
    std::iota(exemplar_ids.begin(), exemplar_ids.end(), std::size_t{0});
  }
  if (exemplar_ids.size() != shots.size()) throw std::invalid_argument("one exemplar id per shot is required");
  RenderedPrompt r;
  r.codec = AnswerCodec::for_task(task);
  r.shot_count = static_cast<int>(shots.size());
  r.exemplar_ids = std::move(exemplar_ids);
  std::string& t = r.text;
  t += "Instructions: " + task.instruction + "\n\n";
  t += "Context: " + task.context + "\n\n";
  t += "Question: " + question_header(task) + "\n\n";
  for (const DataPoint& s : shots) {
    t += feature_block(task, s);
    t += "\nAnswer: " + format_answer(s.label, r.codec) + "\n\n";
  }
  t += feature_block(task, point);
  t += "\n\nAnswer:";
  return r;
}

void FewShotPolicy::validate() const {
  if (!(zero_shot_fraction >= 0.0 && zero_shot_fraction <= 1.0))
    throw std::invalid_argument("zero_shot_fraction must lie in [0, 1]");
  if (shot_min < 0 || shot_min > shot_max) throw std::invalid_argument("need 0 <= shot_min <= shot_max");
  if (eval_shots < 0) throw std::invalid_argument("eval_shots must be non-negative");
}

std::vector<std::size_t> choose_shots(const FewShotPolicy& policy, const exemplar::ExemplarIndex& index,
                                      const DataPoint& point, Rng& rng) {
  policy.validate();
  std::vector<std::size_t> out;
  if (policy.mode == ShotMode::kEvalNearest) {
    if (policy.eval_shots == 0) return out;
    for (const auto& n : index.query_knn(point, static_cast<std::size_t>(policy.eval_shots)))
      out.push_back(n.point_index);
    if (policy.order == ShotOrder::kNearestLast) std::reverse(out.begin(), out.end());
    return out;
  }
  if (rng.bernoulli(policy.zero_shot_fraction)) return out;
  const auto count = static_cast<std::size_t>(rng.between(policy.shot_min, policy.shot_max));
  std::vector<std::size_t> candidates;
  const auto& pool = index.pool();
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (policy.exclude_self && pool[i].features == point.features) continue;
    candidates.push_back(i);
  }
  // Partial Fisher-Yates.
  const std::size_t k = std::min(count, candidates.size());
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(candidates.size() - i));
    std::swap(candidates[i], candidates[j]);
  }
  candidates.resize(k);
  return candidates;
}

std::vector<std::size_t> choose_shots(const FewShotPolicy& policy, const exemplar::ExemplarIndex& index,
                                      const DataPoint& point, std::uint64_t stream) {
  Rng rng = Rng::substream(policy.rng_seed, stream);
  return choose_shots(policy, index, point, rng);
}

TrialRecord TrialRecord::from_json(const Json& j) {
  TrialRecord t;
  t.smiles = optional_field(j, "smiles");
  t.title = optional_field(j, "title");
  t.summary = optional_field(j, "summary");
  t.phase = optional_field(j, "phase");
  t.disease = optional_field(j, "disease");
  t.minimum_age = optional_field(j, "minimum_age");
  t.maximum_age = optional_field(j, "maximum_age");
  t.healthy_volunteers = optional_field(j, "healthy_volunteers");
  t.interventions = optional_field(j, "interventions");
  if (j.contains("adverse_event") && j.at("adverse_event").is_boolean()) t.adverse_event = j.at("adverse_event").get<bool>();
  return t;
}

RenderedPrompt render_adverse_prompt(const TrialRecord& trial, AdverseVariant variant) {
  const std::string& smiles = require(trial.smiles, "smiles");
  RenderedPrompt r;
  r.codec = AnswerCodec::yes_no();
  std::string& t = r.text;
  t = "From the following information about a clinical trial, predict whether it would have an adverse event.\n\n";
  if (variant == AdverseVariant::kSmilesPlusText) {
    t += "Title: " + require(trial.title, "title") + "\n";
    t += "Summary: " + require(trial.summary, "summary") + "\n";
    t += "Phase: " + require(trial.phase, "phase") + "\n";
    t += "Disease: " + require(trial.disease, "disease") + "\n";
    t += "Minimum age: " + require(trial.minimum_age, "minimum_age") + "\n";
    t += "Maximum age: " + require(trial.maximum_age, "maximum_age") + "\n";
    t += "Healthy volunteers: " + require(trial.healthy_volunteers, "healthy_volunteers") + "\n";
    t += "Interventions: " + require(trial.interventions, "interventions") + "\n";
  }
  t += "Drug: " + smiles + "\n\nAnswer:";
  return r;
}

}  // namespace txbench::promptgen

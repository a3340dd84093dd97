#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "txbench/common/json.hpp"
#include "txbench/common/rng.hpp"
#include "txbench/exemplar/index.hpp"
#include "txbench/taskdata/task.hpp"

namespace txbench::promptgen {

using taskdata::LabelRange;
using taskdata::LabelValue;
using taskdata::TaskKind;

class PromptError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DegenerateRange : public PromptError {
 public:
  DegenerateRange() : PromptError("label range min must be below max") {}
};

class OutOfRangeBin : public PromptError {
 public:
  explicit OutOfRangeBin(long bin) : PromptError("bin out of range [0, 1000]: " + std::to_string(bin)) {}
};

class KindMismatch : public PromptError {
 public:
  using PromptError::PromptError;
};

class Unparseable : public PromptError {
 public:
  explicit Unparseable(std::string_view reply);
  const std::string& excerpt() const { return excerpt_; }

 private:
  std::string excerpt_;
};

class MissingField : public PromptError {
 public:
  explicit MissingField(std::string name) : PromptError("missing field: " + name), name_(std::move(name)) {}
  const std::string& name() const { return name_; }

 private:
  std::string name_;
};

inline constexpr int kMaxBin = 1000;

struct AnswerCodec {
  TaskKind kind = TaskKind::kBinary;
  std::optional<LabelRange> label_range;
  std::string positive_choice = "(B)";
  std::string negative_choice = "(A)";

  static AnswerCodec for_task(const taskdata::TaskSpec& task);
  // Binary codec answering "Yes"/"No".
  static AnswerCodec yes_no();
};

// round_half_up(1000 * clamp((y - min) / (max - min), 0, 1)).
int bin_label(double y, const LabelRange& range);
// min + bin / 1000 * (max - min).
double unbin_label(int bin, const LabelRange& range);

// "000".."999", "1000".
std::string format_bin(int bin);

// Binary: bool. Regression: the raw label, binned through the codec range.
// Generation: the label string verbatim.
std::string format_answer(const LabelValue& label, const AnswerCodec& codec);

// Binary: first occurrence of either choice. Regression: first integer token
// in [0, 1000], returned as the bin (not unbinned). Generation: text after the
// last "Answer:" trimmed, else the whole reply trimmed.
LabelValue parse_reply(std::string_view reply, const AnswerCodec& codec);

struct RenderedPrompt {
  std::string text;
  AnswerCodec codec;
  int shot_count = 0;
  std::vector<std::size_t> exemplar_ids;
};

// The question header (template paragraphs without placeholders) and the
// feature block for one point (placeholder paragraphs, substituted).
std::string question_header(const taskdata::TaskSpec& task);
std::string feature_block(const taskdata::TaskSpec& task, const taskdata::DataPoint& point);

// Instructions, Context, Question header, then per shot the feature block and
// "Answer: <formatted>", then the query feature block and a final "Answer:".
// `exemplar_ids` defaults to 0..shots-1.
RenderedPrompt render_prompt(const taskdata::TaskSpec& task, const taskdata::DataPoint& point,
                             const std::vector<taskdata::DataPoint>& shots,
                             std::vector<std::size_t> exemplar_ids = {});

enum class ShotMode { kTrainRandom, kEvalNearest };
enum class ShotOrder { kNearestLast, kNearestFirst };

struct FewShotPolicy {
  ShotMode mode = ShotMode::kEvalNearest;
  double zero_shot_fraction = 0.70;
  int shot_min = 1;
  int shot_max = 10;
  int eval_shots = 10;
  std::uint64_t rng_seed = 0;
  ShotOrder order = ShotOrder::kNearestLast;
  // TrainRandom: never pick pool points whose features equal the query's.
  bool exclude_self = true;

  void validate() const;
};

// Indices into index.pool(). TrainRandom draws from `rng`.
std::vector<std::size_t> choose_shots(const FewShotPolicy& policy, const exemplar::ExemplarIndex& index,
                                      const taskdata::DataPoint& point, Rng& rng);
// Same, with the generator derived from (policy.rng_seed, stream).
std::vector<std::size_t> choose_shots(const FewShotPolicy& policy, const exemplar::ExemplarIndex& index,
                                      const taskdata::DataPoint& point, std::uint64_t stream = 0);

struct TrialRecord {
  std::string smiles;
  std::string title;
  std::string summary;
  std::string phase;
  std::string disease;
  std::string minimum_age;
  std::string maximum_age;
  std::string healthy_volunteers;
  std::string interventions;
  std::optional<bool> adverse_event;

  static TrialRecord from_json(const Json& j);
};

enum class AdverseVariant { kSmilesOnly, kSmilesPlusText };

RenderedPrompt render_adverse_prompt(const TrialRecord& trial, AdverseVariant variant);

}  // namespace txbench::promptgen

#include <algorithm>

#include "txbench/chem/smiles.hpp"
#include "txbench/common/text.hpp"
#include "txbench/seqalign/align.hpp"
#include "txbench/tools/tools.hpp"

#include "detail.hpp"

namespace txbench::tools {

using taskdata::FeatureKind;
using taskdata::TaskKind;
using taskdata::TaskSpec;

using detail::require;

namespace {

const char* kDrugProperties = "Answer the following question about drug properties.";

TaskSpec binary_task(std::string id, std::string instruction, std::string context, std::string question,
                     std::vector<FeatureKind> features) {
  TaskSpec t;
  t.task_id = std::move(id);
  t.kind = TaskKind::kBinary;
  t.feature_schema = std::move(features);
  t.instruction = std::move(instruction);
  t.context = std::move(context);
  t.question_template = std::move(question);
  t.validate();
  return t;
}

std::vector<ModelToolSpec> build_specs() {
  std::vector<ModelToolSpec> specs;
  specs.push_back({"ToxCast", ModelToolKind::kToxCast, std::nullopt, "{assay}: {smiles} is toxic!",
                   "{assay}: {smiles} is not toxic!"});
  specs.push_back(
      {"ClinicalTox", ModelToolKind::kClinicalTox,
       binary_task("clintox", kDrugProperties,
                   "Humans are exposed to a variety of chemicals through food, household products, and medicines, "
                   "some of which can be toxic, leading to over 30% of promising pharmaceuticals failing in human "
                   "trials due to toxicity. Toxic drugs can be identified from clinical trials that failed due to "
                   "toxicity, while non-toxic drugs can be identified from FDA approval status or from clinical "
                   "trials that report no toxicity.",
                   "Given a drug SMILES string, predict whether it\n\n(A) is not toxic (B) is toxic\n\n"
                   "Drug SMILES: {feature_1}",
                   {FeatureKind::kSmiles}),
       "{smiles} is toxic!", "{smiles} is not toxic!"});
  specs.push_back({"Chat", ModelToolKind::kChat, std::nullopt, "", ""});
  specs.push_back(
      {"Mutagenicity", ModelToolKind::kMutagenicity,
       binary_task("ames", kDrugProperties,
                   "Mutagenicity means the ability of a drug to induce genetic alterations. Drugs that can cause "
                   "damage to the DNA can result in cell death or other severe adverse effects. The Ames test is a "
                   "widely used assay that detects whether a compound causes mutations in bacteria.",
                   "Given a drug SMILES string, predict whether it\n\n(A) is not mutagenic (B) is mutagenic\n\n"
                   "Drug SMILES: {feature_1}",
                   {FeatureKind::kSmiles}),
       "{smiles} is mutagenic!", "{smiles} is not mutagenic!"});
  TaskSpec ic50;
  ic50.task_id = "bindingdb_ic50";
  ic50.kind = TaskKind::kRegression;
  ic50.label_range = taskdata::LabelRange{0.0, 1000.0};
  ic50.feature_schema = {FeatureKind::kSmiles, FeatureKind::kAminoAcid};
  ic50.instruction = "Answer the following question about drug target interactions.";
  ic50.context =
      "Drug-target binding is the physical interaction between a small molecule and its protein target. IC50 is "
      "the concentration of a drug needed to inhibit half of the target's activity, so lower values indicate "
      "more potent inhibition.";
  ic50.question_template =
      "Given the target amino acid sequence and compound SMILES string, predict their normalized binding "
      "affinity IC50 from 000 to 1000, where 000 is minimum IC50 and 1000 is maximum IC50.\n\n"
      "Drug SMILES: {feature_1}\n\nTarget amino acid sequence: {feature_2}";
  ic50.validate();
  specs.push_back({"IC50", ModelToolKind::kIc50, ic50,
                   "Predicted normalized IC50 of {smiles} against the target: {value} (scale 000 to 1000, lower "
                   "values suggest more potent inhibition)",
                   ""});
  specs.push_back(
      {"Phase 1 Trial", ModelToolKind::kPhase1Trial,
       binary_task("phase1", "Answer the following question about clinical trials.",
                   "Clinical trial is the most time and cost-consuming step in the drug discovery process. Phase 1 "
                   "clinical trials test the safety and basic properties of a new drug or treatment in a small "
                   "group of people for the first time. Optimizing and designing trials with machine learning could "
                   "drastically lead to the speedup of delivery of life-saving therapeutics to patients. Clinical "
                   "trial outcome prediction is a machine learning task that aims to forecast the outcome of "
                   "clinical trials, such as the approval rate of a drug or treatment. It utilizes various clinical "
                   "trial features, including the drug's molecular structure and patient disease.",
                   "Given a drug SMILES string and disease, predict if the phase 1 trial\n\n(A) would not be "
                   "approved (B) would be approved\n\nDrug SMILES: {feature_1}\n\nDisease: {feature_2}",
                   {FeatureKind::kSmiles, FeatureKind::kText}),
       "The phase 1 trial of {smiles} for {disease} would be approved!",
       "The phase 1 trial of {smiles} for {disease} would not be approved!"});
  return specs;
}

std::string substitute(std::string s, const std::map<std::string, std::string>& vars) {
  for (const auto& [k, v] : vars) {
    const std::string key = "{" + k + "}";
    for (std::size_t pos = s.find(key); pos != std::string::npos; pos = s.find(key, pos + v.size()))
      s.replace(pos, key.size(), v);
  }
  return s;
}

void check_smiles(const std::string& smiles) {
  try {
    chem::parse_smiles(smiles);
  } catch (const chem::SmilesError& e) {
    throw InvalidSmiles("invalid SMILES '" + smiles + "': " + e.what());
  }
}

std::string generate(const std::shared_ptr<llm::Client>& client, const std::string& prompt) {
  if (!client) throw ModelUnavailable("no model endpoint configured");
  try {
    return client->generate(prompt);
  } catch (const llm::LlmError& e) {
    throw ModelUnavailable(e.what());
  }
}

taskdata::LabelValue ask(const std::shared_ptr<llm::Client>& client, const TaskSpec& task,
                         std::vector<taskdata::Feature> features) {
  // The label is a placeholder; only its type matters for the prompt.
  taskdata::LabelValue label = false;
  if (task.kind == taskdata::TaskKind::kRegression) label = task.label_range ? task.label_range->min : 0.0;
  taskdata::DataPoint point{std::move(features), label, taskdata::Split::kTest};
  const promptgen::RenderedPrompt p = promptgen::render_prompt(task, point, {});
  const std::string reply = generate(client, p.text);
  try {
    return promptgen::parse_reply(reply, p.codec);
  } catch (const promptgen::Unparseable& e) {
    throw UnparseableModelReply(std::string("model reply could not be parsed: ") + e.what());
  }
}

}  // namespace

const ModelToolSpec& model_tool_spec(ModelToolKind kind) {
  static const std::vector<ModelToolSpec> specs = build_specs();
  return *std::find_if(specs.begin(), specs.end(), [&](const ModelToolSpec& s) { return s.kind == kind; });
}

const std::vector<ToxCastAssay>& toxcast_assays() {
  static const std::vector<ToxCastAssay> assays = {
      {"TOX21_AhR_LUC_Agonist", "activation of the aryl hydrocarbon receptor in a luciferase reporter cell line"},
      {"TOX21_AR_BLA_Agonist_ratio", "androgen receptor agonism in a beta-lactamase reporter cell line"},
      {"TOX21_Aromatase_Inhibition", "inhibition of the aromatase enzyme that converts androgens to estrogens"},
      {"TOX21_ERa_LUC_VM7_Agonist", "estrogen receptor alpha agonism in a luciferase reporter cell line"},
      {"TOX21_MMP_ratio_down", "loss of mitochondrial membrane potential"},
      {"TOX21_p53_BLA_p1_ratio", "activation of the p53 DNA damage response pathway"},
  };
  return assays;
}

TaskSpec toxcast_task(const ToxCastAssay& assay) {
  return binary_task(
      "toxcast_" + assay.name, kDrugProperties,
      "ToxCast includes qualitative results of high-throughput screening experiments on thousands of compounds. "
      "The " + assay.name + " assay measures " + assay.description + ".",
      "Given a drug SMILES string, predict whether it\n\n(A) is not toxic in the " + assay.name +
          " assay (B) is toxic in the " + assay.name + " assay\n\nDrug SMILES: {feature_1}",
      {FeatureKind::kSmiles});
}

ToolResult invoke_model_tool(const ModelToolSpec& spec, const ToolEnv& env, const ToolInput& inputs) {
  ToolResult r;
  r.tool_name = spec.name;
  r.source = ResultSource::kModel;

  if (spec.kind == ModelToolKind::kChat) {
    const std::string question = require(inputs, "question");
    const std::string reply(text::trim(generate(env.chat ? env.chat : env.predict, question)));
    if (reply.empty()) throw UnparseableModelReply("chat model returned an empty reply");
    r.text = reply;
    r.structured = {{"reply", reply}};
    return r;
  }

  const std::string smiles = require(inputs, "smiles");
  check_smiles(smiles);

  if (spec.kind == ModelToolKind::kToxCast) {
    std::vector<std::string> wanted, unknown;
    for (std::string a : text::split(require(inputs, "assays"), ',')) {
      a = std::string(text::trim(a));
      if (a.empty()) continue;
      const auto& all = toxcast_assays();
      if (std::none_of(all.begin(), all.end(), [&](const ToxCastAssay& x) { return x.name == a; })) {
        unknown.push_back(a);
      } else {
        wanted.push_back(a);
      }
    }
    if (!unknown.empty() || wanted.empty()) {
      std::string names;
      for (const auto& a : toxcast_assays()) names += (names.empty() ? "" : ", ") + a.name;
      std::string bad;
      for (const auto& u : unknown) bad += (bad.empty() ? "" : ", ") + u;
      r.source = ResultSource::kLocal;
      r.text = (unknown.empty() ? std::string("No ToxCast assay given.") : "Unknown ToxCast assay: " + bad + ".") +
               " Available assays: " + names + ".";
      r.structured = {{"unknown_assays", unknown}};
      return r;
    }
    r.text = "Prediction returned:";
    r.structured = Json::object();
    for (const std::string& name : wanted) {
      const auto& assay = *std::find_if(toxcast_assays().begin(), toxcast_assays().end(),
                                        [&](const ToxCastAssay& x) { return x.name == name; });
      const bool toxic = std::get<bool>(ask(env.predict, toxcast_task(assay), {{FeatureKind::kSmiles, smiles}}));
      r.text += "\n" + substitute(toxic ? spec.positive : spec.negative, {{"assay", name}, {"smiles", smiles}});
      r.structured[name] = toxic;
    }
    return r;
  }

  const TaskSpec& task = *spec.task;
  std::vector<taskdata::Feature> features{{FeatureKind::kSmiles, smiles}};
  std::map<std::string, std::string> vars{{"smiles", smiles}};
  if (spec.kind == ModelToolKind::kIc50) {
    std::string protein = require(inputs, "protein");
    try {
      protein = seqalign::make_sequence(seqalign::SequenceKind::kAminoAcid, protein).residues;
    } catch (const seqalign::SequenceError& e) {
      throw InvalidInput(std::string("invalid protein sequence: ") + e.what());
    }
    features.push_back({FeatureKind::kAminoAcid, protein});
    const double bin = std::get<double>(ask(env.predict, task, features));
    vars["value"] = promptgen::format_bin(static_cast<int>(bin));
    r.text = "Prediction returned: " + substitute(spec.positive, vars);
    r.structured = {{"normalized_ic50", static_cast<int>(bin)}};
    return r;
  }
  if (spec.kind == ModelToolKind::kPhase1Trial) {
    const std::string disease = require(inputs, "disease");
    features.push_back({FeatureKind::kText, disease});
    vars["disease"] = disease;
  }
  const bool positive = std::get<bool>(ask(env.predict, task, features));
  r.text = "Context: " + task.context + "\nPrediction returned: " +
           substitute(positive ? spec.positive : spec.negative, vars);
  r.structured = {{"positive", positive}};
  return r;
}

}  // namespace txbench::tools

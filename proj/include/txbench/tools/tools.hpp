#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "txbench/common/json.hpp"
#include "txbench/llmclient/client.hpp"
#include "txbench/promptgen/prompt.hpp"
#include "txbench/taskdata/task.hpp"
#include "txbench/tools/web.hpp"

namespace txbench::tools {

class InvalidSmiles : public ToolError {
 public:
  using ToolError::ToolError;
};

class InvalidInput : public ToolError {
 public:
  using ToolError::ToolError;
};

class InvalidSequence : public ToolError {
 public:
  using ToolError::ToolError;
};

class ModelUnavailable : public ToolError {
 public:
  using ToolError::ToolError;
};

class UnparseableModelReply : public ToolError {
 public:
  using ToolError::ToolError;
};

class UnsupportedConversion : public ToolError {
 public:
  using ToolError::ToolError;
};

enum class ResultSource { kModel, kExternalService, kLocal };
std::string_view to_string(ResultSource s);

struct ToolResult {
  std::string tool_name;
  std::string text;
  Json structured = Json::object();
  ResultSource source = ResultSource::kLocal;
};

// Keys are the lowercase field keys of the tool's schema.
using ToolInput = std::map<std::string, std::string>;

struct InputField {
  std::string key;
  // As written after "Input " in an action block.
  std::string label;
  std::string doc;
  bool required = true;
};

struct ToolDescriptor {
  std::string name;
  std::string description;
  std::vector<InputField> input_schema;
};

using ToolHandler = std::function<ToolResult(const ToolInput&)>;

struct ToolBinding {
  ToolDescriptor descriptor;
  ToolHandler handler;
};

// The 18 tool names, in catalog order.
const std::vector<std::string>& canonical_tool_names();

struct ServiceEndpoints {
  std::string pubchem = "https://pubchem.ncbi.nlm.nih.gov/rest/pug";
  std::string chembl = "https://www.ebi.ac.uk/chembl/api/data";
  std::string eutils = "https://eutils.ncbi.nlm.nih.gov/entrez/eutils";
  std::string blast = "https://blast.ncbi.nlm.nih.gov/blast/Blast.cgi";
  std::string wikipedia = "https://en.wikipedia.org/w/rest.php/v1";
  // Any SearxNG-compatible /search endpoint returning format=json.
  std::string web_search = "http://127.0.0.1:8888/search";

  Json to_json() const;
  static ServiceEndpoints from_json(const Json& j);
};

struct ToolLimits {
  int top_k = 3;
  std::size_t html_cap = 20000;
  std::size_t abstract_cap = 600;
  int synonyms = 10;
  int blast_hits = 5;
  std::string blast_database = "swissprot";
  int blast_max_polls = 30;
  std::chrono::milliseconds blast_poll_interval{10000};
};

// Everything the tools talk to. Model tools need `predict`; Chat needs `chat`.
struct ToolEnv {
  std::shared_ptr<llm::Client> predict;
  std::shared_ptr<llm::Client> chat;
  std::shared_ptr<ServiceClient> web;
  ServiceEndpoints endpoints;
  ToolLimits limits;
  Sleeper sleeper = thread_sleeper();
};

// ---- model-backed tools

enum class ModelToolKind { kToxCast, kClinicalTox, kChat, kMutagenicity, kIc50, kPhase1Trial };

struct ModelToolSpec {
  std::string name;
  ModelToolKind kind;
  // Prompt template for the backing predictor. Chat has none.
  std::optional<taskdata::TaskSpec> task;
  // Observation sentence for the positive and negative answer. "{smiles}"
  // and "{disease}" are substituted. Regression tools use `positive` only,
  // with "{value}".
  std::string positive;
  std::string negative;
};

const ModelToolSpec& model_tool_spec(ModelToolKind kind);

struct ToxCastAssay {
  std::string name;
  std::string description;
};
const std::vector<ToxCastAssay>& toxcast_assays();
taskdata::TaskSpec toxcast_task(const ToxCastAssay& assay);

ToolResult invoke_model_tool(const ModelToolSpec& spec, const ToolEnv& env, const ToolInput& inputs);

// ---- knowledge retrieval

enum class SearchKind { kWikipedia, kPubMed, kWeb };
ToolResult search_tool(SearchKind kind, const ToolEnv& env, const std::string& query);
ToolResult html_fetch(const ToolEnv& env, const std::string& url);

// ---- molecules

ToolResult smiles_description(const ToolEnv& env, const std::string& smiles);
ToolResult smiles_therapy(const ToolEnv& env, const std::string& smiles);
ToolResult molecule_search(const ToolEnv& env, const std::string& name);

enum class Repr { kSmiles, kInchi, kInchiKey, kMol };
Repr parse_repr(std::string_view s);
std::string_view to_string(Repr r);
ToolResult molecule_convert(const ToolEnv& env, const std::string& value, Repr from, Repr to);

// ---- genes and proteins

enum class GeneToolKind { kGeneSequence, kGeneDescription, kBlastP, kProteinDescription };
ToolResult gene_tool(GeneToolKind kind, const ToolEnv& env, const ToolInput& inputs);

// Longest ATG-initiated open reading frame over the three forward frames,
// translated with the standard genetic code. An ORF without a stop codon runs
// to the end of the sequence. Empty when there is no ATG.
std::string translate_orf(std::string_view dna);

// Registry bindings for all 18 tools sharing `env`.
std::vector<ToolBinding> canonical_tools(std::shared_ptr<const ToolEnv> env);

}  // namespace txbench::tools

#include "txbench/tools/tools.hpp"

#include "detail.hpp"

namespace txbench::tools {

const std::vector<std::string>& canonical_tool_names() {
  static const std::vector<std::string> names = {
      "ToxCast",        "ClinicalTox",      "Chat",          "Mutagenicity",          "IC50",
      "Phase 1 Trial",  "Wikipedia Search", "PubMed Search", "Web Search",            "HTML Fetch",
      "SMILES to Description", "SMILES Therapy", "Molecule Tool", "Molecule Convert", "Gene Sequence",
      "Gene Description", "BlastP", "Protein Description"};
  return names;
}

std::string_view to_string(ResultSource s) {
  switch (s) {
    case ResultSource::kModel: return "model";
    case ResultSource::kExternalService: return "external_service";
    case ResultSource::kLocal: return "local";
  }
  return "?";
}

Json ServiceEndpoints::to_json() const {
  return {{"pubchem", pubchem}, {"chembl", chembl},       {"eutils", eutils},
          {"blast", blast},     {"wikipedia", wikipedia}, {"web_search", web_search}};
}

ServiceEndpoints ServiceEndpoints::from_json(const Json& j) {
  ServiceEndpoints e;
  for (const auto& [k, v] : j.items()) {
    std::string* slot = k == "pubchem"      ? &e.pubchem
                        : k == "chembl"     ? &e.chembl
                        : k == "eutils"     ? &e.eutils
                        : k == "blast"      ? &e.blast
                        : k == "wikipedia"  ? &e.wikipedia
                        : k == "web_search" ? &e.web_search
                                            : nullptr;
    if (!slot) throw std::invalid_argument("unknown service endpoint key '" + k + "'");
    *slot = v.get<std::string>();
  }
  return e;
}

namespace {

const InputField kSmiles{"smiles", "SMILES", "drug SMILES string"};
const InputField kQuery{"query", "Query", "search text"};

}  // namespace

std::vector<ToolBinding> canonical_tools(std::shared_ptr<const ToolEnv> env) {
  std::vector<ToolBinding> out;
  auto model = [&](ModelToolKind kind, std::string description, std::vector<InputField> schema) {
    const ModelToolSpec& spec = model_tool_spec(kind);
    out.push_back({{spec.name, std::move(description), std::move(schema)},
                   [env, &spec](const ToolInput& in) { return invoke_model_tool(spec, *env, in); }});
  };
  std::string assays;
  for (const auto& a : toxcast_assays()) assays += (assays.empty() ? "" : ", ") + a.name;

  model(ModelToolKind::kToxCast,
        "Predicts whether a drug is toxic in selected ToxCast assays using the property prediction model.",
        {kSmiles, {"assays", "Assays", "comma-separated assay names from: " + assays}});
  model(ModelToolKind::kClinicalTox, "Predicts whether a drug is clinically toxic in humans.", {kSmiles});
  model(ModelToolKind::kChat, "Asks the conversational therapeutics model a free-text question.",
        {{"question", "Question", "the question to ask"}});
  model(ModelToolKind::kMutagenicity, "Predicts whether a drug is mutagenic in the Ames test.", {kSmiles});
  model(ModelToolKind::kIc50,
        "Predicts the normalized IC50 (000 to 1000) between a drug and a target protein. Lower values suggest "
        "more potent inhibition.",
        {kSmiles, {"protein", "Protein", "target amino acid sequence"}});
  model(ModelToolKind::kPhase1Trial, "Predicts whether a phase 1 trial of a drug for a disease would be approved.",
        {kSmiles, {"disease", "Disease", "disease name"}});

  auto bind = [&](std::string name, std::string description, std::vector<InputField> schema, ToolHandler h) {
    out.push_back({{std::move(name), std::move(description), std::move(schema)}, std::move(h)});
  };
  bind("Wikipedia Search", "Searches Wikipedia and returns the top articles with title, link and summary.", {kQuery},
       [env](const ToolInput& in) { return search_tool(SearchKind::kWikipedia, *env, detail::require(in, "query")); });
  bind("PubMed Search",
       "Searches PubMed and returns PMID, title, authors, journal, date and abstract of the top articles.", {kQuery},
       [env](const ToolInput& in) { return search_tool(SearchKind::kPubMed, *env, detail::require(in, "query")); });
  bind("Web Search", "General web search returning titles, links and snippets.", {kQuery},
       [env](const ToolInput& in) { return search_tool(SearchKind::kWeb, *env, detail::require(in, "query")); });
  bind("HTML Fetch", "Fetches the raw HTML of a web page.", {{"url", "URL", "http or https address"}},
       [env](const ToolInput& in) { return html_fetch(*env, detail::require(in, "url")); });
  bind("SMILES to Description",
       "Looks up a molecule in PubChem: CID, formula, weight, charge, IUPAC name, XLogP and synonyms.", {kSmiles},
       [env](const ToolInput& in) { return smiles_description(*env, detail::require(in, "smiles")); });
  bind("SMILES Therapy",
       "Looks up therapeutic annotations for a drug: ChEMBL ID, mechanisms of action, indications and ATC codes.",
       {kSmiles}, [env](const ToolInput& in) { return smiles_therapy(*env, detail::require(in, "smiles")); });
  bind("Molecule Tool",
       "Finds a compound by name and returns its identifiers and properties. Given Value, From and To it converts "
       "between representations instead.",
       {{"name", "Name", "compound name", false},
        {"value", "Value", "molecule to convert", false},
        {"from", "From", "SMILES, InChI, InChIKey or Mol", false},
        {"to", "To", "SMILES, InChI, InChIKey or Mol", false}},
       [env](const ToolInput& in) {
         if (in.count("value")) {
           ToolResult r = molecule_convert(*env, detail::require(in, "value"), parse_repr(detail::require(in, "from")),
                                           parse_repr(detail::require(in, "to")));
           r.tool_name = "Molecule Tool";
           return r;
         }
         return molecule_search(*env, detail::require(in, "name"));
       });
  bind("Molecule Convert", "Converts a molecule between SMILES, InChI, InChIKey and Mol block.",
       {{"value", "Value", "molecule in the source representation"},
        {"from", "From", "SMILES, InChI, InChIKey or Mol"},
        {"to", "To", "SMILES, InChI, InChIKey or Mol"}},
       [env](const ToolInput& in) {
         return molecule_convert(*env, detail::require(in, "value"), parse_repr(detail::require(in, "from")),
                                 parse_repr(detail::require(in, "to")));
       });
  const InputField gene{"gene", "Gene", "gene symbol"};
  const InputField organism{"organism", "Organism", "organism name, default Homo sapiens", false};
  bind("Gene Sequence", "Retrieves the protein sequence encoded by a gene from NCBI Nucleotide.", {gene, organism},
       [env](const ToolInput& in) { return gene_tool(GeneToolKind::kGeneSequence, *env, in); });
  bind("Gene Description", "Retrieves the official symbol, full name, description and summary of a gene.",
       {gene, organism}, [env](const ToolInput& in) { return gene_tool(GeneToolKind::kGeneDescription, *env, in); });
  bind("BlastP", "Runs BLASTP for an amino acid sequence and returns hits with gene names, organisms and accessions.",
       {{"sequence", "Sequence", "amino acid sequence"}},
       [env](const ToolInput& in) { return gene_tool(GeneToolKind::kBlastP, *env, in); });
  bind("Protein Description", "Describes a protein (organism, definition, accession) given its name or sequence.",
       {kQuery}, [env](const ToolInput& in) { return gene_tool(GeneToolKind::kProteinDescription, *env, in); });
  return out;
}

}  // namespace txbench::tools

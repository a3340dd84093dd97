#include "txbench/chem/molblock.hpp"
#include "txbench/chem/smiles.hpp"
#include "txbench/common/text.hpp"
#include "txbench/tools/tools.hpp"

#include "detail.hpp"

namespace txbench::tools {

using detail::json_path;
using detail::json_text;

namespace {

// First record of a PubChem PropertyTable response; 404 and CID 0 are NotFound.
Json pubchem_properties(const ToolEnv& env, const WebRequest& req, const std::string& what) {
  const WebResponse resp = detail::web(env).request(req);
  if (resp.status == 404 || resp.status == 400) throw NotFound("PubChem has no record for " + what);
  if (resp.status < 200 || resp.status >= 300)
    throw ServiceUnavailable("PubChem returned HTTP " + std::to_string(resp.status));
  Json j;
  try {
    j = Json::parse(resp.body);
  } catch (const Json::exception&) {
    throw ServiceUnavailable("PubChem returned a malformed JSON body");
  }
  const Json& rec = json_path(j, {"PropertyTable", "Properties", "0"});
  const std::string cid = json_text(rec, "CID");
  if (cid.empty() || cid == "0") throw NotFound("PubChem has no record for " + what);
  return rec;
}

// Newer PubChem responses name the canonical field "ConnectivitySMILES".
std::string smiles_field(const Json& rec) {
  for (const char* k : {"CanonicalSMILES", "ConnectivitySMILES", "SMILES", "IsomericSMILES"}) {
    std::string v = json_text(rec, k);
    if (!v.empty()) return v;
  }
  return {};
}

void add_line(std::string& out, Json& structured, const std::string& label, const std::string& value) {
  if (value.empty()) return;
  if (!out.empty()) out += "\n";
  out += label + ": " + value;
  structured[label] = value;
}

std::string canonical_smiles(const std::string& smiles) {
  try {
    return chem::canonical_serialize(chem::parse_smiles(smiles));
  } catch (const chem::SmilesError& e) {
    throw InvalidInput("invalid SMILES '" + smiles + "': " + e.what());
  }
}

}  // namespace

ToolResult smiles_description(const ToolEnv& env, const std::string& smiles_in) {
  const std::string smiles(text::trim(smiles_in));
  if (smiles.empty()) throw InvalidInput("SMILES must not be empty");
  const std::string base = env.endpoints.pubchem + "/compound";
  const Json rec = pubchem_properties(
      env,
      {"GET", base + "/smiles/" + percent_encode(smiles) + "/property/MolecularFormula,MolecularWeight,Charge,IUPACName,XLogP/JSON",
       "", ""},
      smiles);
  const std::string cid = json_text(rec, "CID");
  std::string synonyms;
  try {
    const Json syn = detail::web(env).get_json(base + "/cid/" + cid + "/synonyms/JSON");
    int n = 0;
    for (const Json& s : json_path(syn, {"InformationList", "Information", "0", "Synonym"})) {
      if (n++ == env.limits.synonyms) break;
      if (s.is_string()) synonyms += (synonyms.empty() ? "" : ", ") + s.get<std::string>();
    }
  } catch (const NotFound&) {
  }
  ToolResult r{"SMILES to Description", "", Json::object(), ResultSource::kExternalService};
  add_line(r.text, r.structured, "PubChem CID", cid);
  add_line(r.text, r.structured, "Molecular Formula", json_text(rec, "MolecularFormula"));
  add_line(r.text, r.structured, "Molecular Weight", json_text(rec, "MolecularWeight"));
  add_line(r.text, r.structured, "Charge", json_text(rec, "Charge"));
  add_line(r.text, r.structured, "IUPAC Name", json_text(rec, "IUPACName"));
  add_line(r.text, r.structured, "XLogP", json_text(rec, "XLogP"));
  add_line(r.text, r.structured, "Synonyms", synonyms);
  return r;
}

ToolResult smiles_therapy(const ToolEnv& env, const std::string& smiles_in) {
  const std::string smiles(text::trim(smiles_in));
  if (smiles.empty()) throw InvalidInput("SMILES must not be empty");
  ServiceClient& web = detail::web(env);
  const std::string base = env.endpoints.chembl;
  const Json found = web.get_json(base + "/molecule.json?molecule_structures__canonical_smiles__flexmatch=" +
                                  percent_encode(smiles) + "&limit=1");
  const Json& mol = json_path(found, {"molecules", "0"});
  const std::string id = json_text(mol, "molecule_chembl_id");
  if (id.empty()) throw NotFound("ChEMBL has no molecule matching " + smiles);

  const Json mech = web.get_json(base + "/mechanism.json?molecule_chembl_id=" + id + "&limit=20");
  std::vector<std::string> mechanisms;
  for (const Json& m : json_path(mech, {"mechanisms"})) {
    std::string s = json_text(m, "mechanism_of_action");
    const std::string action = json_text(m, "action_type");
    if (!action.empty()) s += " (" + text::to_lower(action) + ")";
    if (!s.empty()) mechanisms.push_back(s);
  }
  const Json ind = web.get_json(base + "/drug_indication.json?molecule_chembl_id=" + id + "&limit=20");
  std::vector<std::string> indications;
  for (const Json& d : json_path(ind, {"drug_indications"})) {
    std::string s = json_text(d, "mesh_heading");
    if (s.empty()) s = json_text(d, "efo_term");
    const std::string phase = json_text(d, "max_phase_for_ind");
    if (!phase.empty()) s += " (max phase " + phase + ")";
    if (!s.empty()) indications.push_back(s);
  }
  std::vector<std::string> atc;
  for (const Json& a : json_path(mol, {"atc_classifications"}))
    if (a.is_string()) atc.push_back(a.get<std::string>());

  auto join = [](const std::vector<std::string>& v, const char* sep) {
    std::string out;
    for (const auto& s : v) out += (out.empty() ? "" : sep) + s;
    return out.empty() ? std::string("none recorded") : out;
  };
  ToolResult r{"SMILES Therapy", "", Json::object(), ResultSource::kExternalService};
  r.text = "ChEMBL ID: " + id;
  if (!json_text(mol, "pref_name").empty()) r.text += "\nName: " + json_text(mol, "pref_name");
  r.text += "\nMechanisms of action: " + join(mechanisms, "; ") + "\nIndications: " + join(indications, "; ") +
            "\nATC classifications: " + join(atc, ", ");
  r.structured = {{"chembl_id", id},
                  {"name", json_text(mol, "pref_name")},
                  {"mechanisms", mechanisms},
                  {"indications", indications},
                  {"atc", atc}};
  return r;
}

ToolResult molecule_search(const ToolEnv& env, const std::string& name_in) {
  const std::string name(text::trim(name_in));
  if (name.empty()) throw InvalidInput("compound name must not be empty");
  const Json rec = pubchem_properties(
      env,
      {"GET",
       env.endpoints.pubchem + "/compound/name/" + percent_encode(name) +
           "/property/MolecularFormula,MolecularWeight,CanonicalSMILES,InChI,InChIKey,IUPACName/JSON",
       "", ""},
      name);
  ToolResult r{"Molecule Tool", "", Json::object(), ResultSource::kExternalService};
  add_line(r.text, r.structured, "PubChem CID", json_text(rec, "CID"));
  add_line(r.text, r.structured, "Name", name);
  add_line(r.text, r.structured, "Molecular Formula", json_text(rec, "MolecularFormula"));
  add_line(r.text, r.structured, "Molecular Weight", json_text(rec, "MolecularWeight"));
  add_line(r.text, r.structured, "SMILES", smiles_field(rec));
  add_line(r.text, r.structured, "InChI", json_text(rec, "InChI"));
  add_line(r.text, r.structured, "InChIKey", json_text(rec, "InChIKey"));
  add_line(r.text, r.structured, "IUPAC Name", json_text(rec, "IUPACName"));
  return r;
}

Repr parse_repr(std::string_view s) {
  const std::string v = text::to_lower(text::trim(s));
  if (v == "smiles") return Repr::kSmiles;
  if (v == "inchi") return Repr::kInchi;
  if (v == "inchikey") return Repr::kInchiKey;
  if (v == "mol" || v == "molblock" || v == "mol block") return Repr::kMol;
  throw UnsupportedConversion("unknown molecular representation '" + std::string(s) +
                              "' (supported: SMILES, InChI, InChIKey, Mol)");
}

std::string_view to_string(Repr r) {
  switch (r) {
    case Repr::kSmiles: return "SMILES";
    case Repr::kInchi: return "InChI";
    case Repr::kInchiKey: return "InChIKey";
    case Repr::kMol: return "Mol";
  }
  return "?";
}

ToolResult molecule_convert(const ToolEnv& env, const std::string& value_in, Repr from, Repr to) {
  // Mol blocks are multi-line; only SMILES-like inputs are trimmed.
  const std::string value = from == Repr::kMol ? value_in : std::string(text::trim(value_in));
  if (text::trim(value).empty()) throw InvalidInput("nothing to convert");
  auto service = [&]() -> ServiceClient& {
    if (!env.web) throw UnsupportedConversion(std::string(to_string(from)) + " to " + std::string(to_string(to)) +
                                              " needs the compound service, which is not configured");
    return *env.web;
  };
  const std::string base = env.endpoints.pubchem + "/compound";

  ToolResult r{"Molecule Convert", "", Json::object(), ResultSource::kLocal};
  if (from == to && from != Repr::kSmiles) {
    r.text = value;
  } else {
    // Step 1: anything to SMILES. `query_smiles` is what the service sees.
    std::string smiles;
    std::string query_smiles;
    switch (from) {
      case Repr::kSmiles:
        smiles = canonical_smiles(value);
        query_smiles = value;
        break;
      case Repr::kMol:
        try {
          smiles = chem::canonical_serialize(chem::parse_molblock(value));
        } catch (const chem::MolBlockError& e) {
          throw InvalidInput(std::string("invalid mol block: ") + e.what());
        }
        query_smiles = smiles;
        break;
      case Repr::kInchi:
      case Repr::kInchiKey: {
        service();
        r.source = ResultSource::kExternalService;
        const WebRequest req =
            from == Repr::kInchi
                ? WebRequest{"POST", base + "/inchi/property/CanonicalSMILES/JSON", "inchi=" + percent_encode(value),
                             "application/x-www-form-urlencoded"}
                : WebRequest{"GET", base + "/inchikey/" + percent_encode(value) + "/property/CanonicalSMILES/JSON",
                             "", ""};
        try {
          query_smiles = smiles_field(pubchem_properties(env, req, value));
        } catch (const NotFound& e) {
          throw InvalidInput(e.what());
        }
        smiles = canonical_smiles(query_smiles);
        break;
      }
    }
    // Step 2: SMILES to the target.
    switch (to) {
      case Repr::kSmiles: r.text = smiles; break;
      case Repr::kMol: r.text = chem::write_molblock(chem::parse_smiles(smiles)); break;
      case Repr::kInchi:
      case Repr::kInchiKey: {
        service();
        r.source = ResultSource::kExternalService;
        const std::string prop = to == Repr::kInchi ? "InChI" : "InChIKey";
        try {
          r.text = json_text(pubchem_properties(env,
                                                {"GET",
                                                 base + "/smiles/" + percent_encode(query_smiles) + "/property/" +
                                                     prop + "/JSON",
                                                 "", ""},
                                                query_smiles),
                             prop);
        } catch (const NotFound& e) {
          throw InvalidInput(e.what());
        }
        if (r.text.empty()) throw ServiceUnavailable("PubChem returned no " + prop);
        break;
      }
    }
  }
  r.structured = {{"from", to_string(from)}, {"to", to_string(to)}, {"value", r.text}};
  return r;
}

}  // namespace txbench::tools

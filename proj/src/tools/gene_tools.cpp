#include <regex>

#include "txbench/common/text.hpp"
#include "txbench/seqalign/align.hpp"
#include "txbench/tools/tools.hpp"

#include "detail.hpp"

namespace txbench::tools {

using detail::json_path;
using detail::json_text;

namespace {

int base_index(char c) {
  switch (c) {
    case 'T': case 'U': return 0;
    case 'C': return 1;
    case 'A': return 2;
    case 'G': return 3;
    default: return -1;
  }
}

// Codon table indexed TCAG x TCAG x TCAG.
char codon_aa(char a, char b, char c) {
  static const char* table = "FFLLSSSSYY**CC*WLLLLPPPPHHQQRRRRIIIMTTTTNNKKSSRRVVVVAAAADDEEGGGG";
  const int i = base_index(a), j = base_index(b), k = base_index(c);
  if (i < 0 || j < 0 || k < 0) return 'X';
  return table[i * 16 + j * 4 + k];
}

std::string first_id(const Json& search) {
  const Json& id = json_path(search, {"esearchresult", "idlist", "0"});
  return id.is_string() ? id.get<std::string>() : std::string{};
}

std::string clean_sequence(std::string_view s) {
  std::string out;
  for (char c : s)
    if (!std::isspace(static_cast<unsigned char>(c))) out.push_back(c);
  return out;
}

std::string validated_protein(std::string_view raw) {
  try {
    return seqalign::make_sequence(seqalign::SequenceKind::kAminoAcid, clean_sequence(raw)).residues;
  } catch (const seqalign::SequenceError& e) {
    throw InvalidSequence(std::string("not an amino acid sequence: ") + e.what());
  }
}

struct BlastHit {
  std::string accession;
  std::string title;
  std::string organism;
  std::string identity;
  std::string evalue;
};

// "RecName: Full=Foo; Short=F" -> "Foo"; "Foo [Homo sapiens]" -> "Foo".
std::string hit_name(std::string title) {
  if (title.rfind("RecName: Full=", 0) == 0) title = title.substr(14);
  if (auto p = title.find(';'); p != std::string::npos) title = title.substr(0, p);
  static const std::regex org(R"(\s*\[[^\]]*\]\s*$)");
  return std::regex_replace(title, org, "");
}

std::vector<BlastHit> run_blast(const ToolEnv& env, const std::string& protein) {
  ServiceClient& web = detail::web(env);
  const std::string base = env.endpoints.blast;
  const WebResponse put =
      web.request({"POST", base,
                   "CMD=Put&PROGRAM=blastp&DATABASE=" + percent_encode(env.limits.blast_database) +
                       "&HITLIST_SIZE=" + std::to_string(env.limits.blast_hits) + "&QUERY=" + percent_encode(protein),
                   "application/x-www-form-urlencoded"});
  if (put.status != 200) throw ServiceUnavailable("BLAST submit returned HTTP " + std::to_string(put.status));
  static const std::regex rid_re(R"(RID = (\S+))");
  std::smatch m;
  if (!std::regex_search(put.body, m, rid_re)) throw ServiceUnavailable("BLAST submit returned no request id");
  const std::string rid = m[1].str();

  for (int poll = 0;; ++poll) {
    if (poll == env.limits.blast_max_polls) throw ServiceUnavailable("BLAST search " + rid + " did not finish");
    env.sleeper(env.limits.blast_poll_interval);
    const std::string info = web.get(base + "?CMD=Get&FORMAT_OBJECT=SearchInfo&RID=" + rid);
    if (info.find("Status=READY") != std::string::npos) {
      if (info.find("ThereAreHits=no") != std::string::npos) return {};
      break;
    }
    if (info.find("Status=FAILED") != std::string::npos || info.find("Status=UNKNOWN") != std::string::npos)
      throw ServiceUnavailable("BLAST search " + rid + " failed");
  }
  const Json j = web.get_json(base + "?CMD=Get&FORMAT_TYPE=JSON2_S&RID=" + rid);
  std::vector<BlastHit> hits;
  for (const Json& h : json_path(j, {"BlastOutput2", "0", "report", "results", "search", "hits"})) {
    if (static_cast<int>(hits.size()) == env.limits.blast_hits) break;
    const Json& d = json_path(h, {"description", "0"});
    const Json& hsp = json_path(h, {"hsps", "0"});
    BlastHit hit{json_text(d, "accession"), json_text(d, "title"), json_text(d, "sciname"), "", json_text(hsp, "evalue")};
    const std::string ident = json_text(hsp, "identity"), len = json_text(hsp, "align_len");
    if (!ident.empty() && !len.empty()) hit.identity = ident + "/" + len;
    hits.push_back(hit);
  }
  return hits;
}

ToolResult gene_sequence(const ToolEnv& env, const ToolInput& in) {
  const std::string gene = detail::require(in, "gene");
  const std::string organism = detail::optional_input(in, "organism", "Homo sapiens");
  ServiceClient& web = detail::web(env);
  const std::string base = env.endpoints.eutils;
  const std::string term = gene + "[Gene Name] AND " + organism + "[Organism] AND refseq[filter] AND mRNA[Filter]";
  const std::string id =
      first_id(web.get_json(base + "/esearch.fcgi?db=nuccore&retmode=json&retmax=1&term=" + percent_encode(term)));
  if (id.empty()) throw NotFound("no nucleotide record for " + gene + " in " + organism);
  const std::string fasta = web.get(base + "/efetch.fcgi?db=nuccore&rettype=fasta&retmode=text&id=" + id);
  const auto nl = fasta.find('\n');
  if (fasta.empty() || fasta[0] != '>' || nl == std::string::npos)
    throw ServiceUnavailable("nucleotide record " + id + " is not FASTA");
  const std::string header = fasta.substr(1, nl - 1);
  const std::string protein = translate_orf(clean_sequence(std::string_view(fasta).substr(nl + 1)));
  if (protein.empty()) throw NotFound("record " + id + " has no open reading frame");
  const std::string accession = header.substr(0, header.find(' '));
  const std::string definition = header.find(' ') == std::string::npos ? "" : header.substr(header.find(' ') + 1);

  ToolResult r{"Gene Sequence", "", Json::object(), ResultSource::kExternalService};
  r.text = "Gene: " + gene + "\nOrganism: " + organism + "\nAccession: " + accession + "\nDefinition: " +
           definition + "\nProtein sequence (" + std::to_string(protein.size()) + " aa): " + protein;
  r.structured = {{"gene", gene}, {"organism", organism}, {"accession", accession}, {"sequence", protein}};
  return r;
}

ToolResult gene_description(const ToolEnv& env, const ToolInput& in) {
  const std::string gene = detail::require(in, "gene");
  const std::string organism = detail::optional_input(in, "organism", "Homo sapiens");
  ServiceClient& web = detail::web(env);
  const std::string base = env.endpoints.eutils;
  const std::string term = gene + "[sym] AND " + organism + "[orgn]";
  const std::string id =
      first_id(web.get_json(base + "/esearch.fcgi?db=gene&retmode=json&retmax=1&term=" + percent_encode(term)));
  if (id.empty()) throw NotFound("no gene record for " + gene + " in " + organism);
  const Json sum = web.get_json(base + "/esummary.fcgi?db=gene&retmode=json&id=" + id);
  const Json& rec = json_path(sum, {"result", id});
  if (!rec.is_object()) throw NotFound("no gene summary for id " + id);
  std::string symbol = json_text(rec, "nomenclaturesymbol");
  if (symbol.empty()) symbol = json_text(rec, "name");
  std::string full = json_text(rec, "nomenclaturename");
  if (full.empty()) full = json_text(rec, "description");
  const std::string org = json_text(json_path(rec, {"organism"}), "scientificname");

  ToolResult r{"Gene Description", "", Json::object(), ResultSource::kExternalService};
  r.text = "Official Symbol: " + symbol + "\nFull Name: " + full + "\nGene ID: " + id +
           "\nOrganism: " + (org.empty() ? organism : org) + "\nDescription: " + json_text(rec, "description") +
           "\nSummary: " + json_text(rec, "summary");
  r.structured = {{"symbol", symbol}, {"full_name", full}, {"gene_id", id}, {"summary", json_text(rec, "summary")}};
  return r;
}

ToolResult blastp(const ToolEnv& env, const ToolInput& in) {
  const std::string protein = validated_protein(detail::require(in, "sequence"));
  const auto hits = run_blast(env, protein);
  ToolResult r{"BlastP", "", Json::array(), ResultSource::kExternalService};
  if (hits.empty()) {
    r.text = "No BLASTP hits.";
    return r;
  }
  r.text = "BLASTP hits:";
  for (std::size_t i = 0; i < hits.size(); ++i) {
    const BlastHit& h = hits[i];
    r.text += "\n" + std::to_string(i + 1) + ". " + hit_name(h.title) + " | " + h.organism + " | " + h.accession;
    if (!h.identity.empty()) r.text += " | identity " + h.identity;
    if (!h.evalue.empty()) r.text += " | E=" + h.evalue;
    r.structured.push_back({{"gene", hit_name(h.title)},
                            {"organism", h.organism},
                            {"accession", h.accession},
                            {"identity", h.identity},
                            {"evalue", h.evalue}});
  }
  return r;
}

bool looks_like_protein(const std::string& s) {
  const std::string c = clean_sequence(s);
  if (c.size() < 20) return false;
  try {
    seqalign::make_sequence(seqalign::SequenceKind::kAminoAcid, c);
  } catch (const seqalign::SequenceError&) {
    return false;
  }
  return std::all_of(c.begin(), c.end(), [](unsigned char ch) { return std::isupper(ch); });
}

ToolResult protein_description(const ToolEnv& env, const ToolInput& in) {
  const std::string query = detail::require(in, "query");
  ServiceClient& web = detail::web(env);
  const std::string base = env.endpoints.eutils;
  std::string id;
  std::string via = "name";
  if (looks_like_protein(query)) {
    const auto hits = run_blast(env, validated_protein(query));
    if (hits.empty() || hits[0].accession.empty()) throw NotFound("no BLASTP hit for the given sequence");
    id = hits[0].accession;
    via = "BLASTP";
  } else {
    id = first_id(web.get_json(base + "/esearch.fcgi?db=protein&retmode=json&retmax=1&term=" +
                               percent_encode(query + " AND refseq[filter]")));
    if (id.empty()) throw NotFound("no protein record for " + query);
  }
  const Json sum = web.get_json(base + "/esummary.fcgi?db=protein&retmode=json&id=" + percent_encode(id));
  // Results are keyed by uid, which differs from an accession query.
  const Json& uids = json_path(sum, {"result", "uids"});
  const std::string uid = uids.size() && uids[0].is_string() ? uids[0].get<std::string>() : id;
  const Json& rec = json_path(sum, {"result", uid});
  if (!rec.is_object()) throw NotFound("no protein summary for " + id);
  std::string accession = json_text(rec, "accessionversion");
  if (accession.empty()) accession = json_text(rec, "caption");

  ToolResult r{"Protein Description", "", Json::object(), ResultSource::kExternalService};
  r.text = "Organism: " + json_text(rec, "organism") + "\nDefinition: " + json_text(rec, "title") +
           "\nAccession: " + accession + "\nMatched by: " + via;
  r.structured = {{"organism", json_text(rec, "organism")},
                  {"definition", json_text(rec, "title")},
                  {"accession", accession},
                  {"matched_by", via}};
  return r;
}

}  // namespace

std::string translate_orf(std::string_view dna_in) {
  std::string dna = text::to_upper(dna_in);
  std::string best;
  for (std::size_t frame = 0; frame < 3; ++frame) {
    std::string current;
    bool open = false;
    for (std::size_t i = frame; i + 3 <= dna.size(); i += 3) {
      const char aa = codon_aa(dna[i], dna[i + 1], dna[i + 2]);
      if (!open) {
        if (dna.compare(i, 3, "ATG") == 0 || dna.compare(i, 3, "AUG") == 0) {
          open = true;
          current = "M";
        }
        continue;
      }
      if (aa == '*') {
        if (current.size() > best.size()) best = current;
        open = false;
        continue;
      }
      current.push_back(aa);
    }
    if (open && current.size() > best.size()) best = current;
  }
  return best;
}

ToolResult gene_tool(GeneToolKind kind, const ToolEnv& env, const ToolInput& inputs) {
  switch (kind) {
    case GeneToolKind::kGeneSequence: return gene_sequence(env, inputs);
    case GeneToolKind::kGeneDescription: return gene_description(env, inputs);
    case GeneToolKind::kBlastP: return blastp(env, inputs);
    case GeneToolKind::kProteinDescription: return protein_description(env, inputs);
  }
  throw std::logic_error("unreachable");
}

}  // namespace txbench::tools

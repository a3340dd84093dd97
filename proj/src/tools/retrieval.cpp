#include <regex>

#include "txbench/common/text.hpp"
#include "txbench/tools/tools.hpp"

#include "detail.hpp"

namespace txbench::tools {

using detail::json_path;
using detail::json_text;

namespace {

struct Hit {
  std::string title;
  std::string link;
  std::string snippet;
};

ToolResult render_hits(const std::string& tool, const std::string& query, const std::vector<Hit>& hits) {
  ToolResult r{tool, "", Json::array(), ResultSource::kExternalService};
  if (hits.empty()) {
    r.text = "No results found for '" + query + "'.";
    return r;
  }
  for (std::size_t i = 0; i < hits.size(); ++i) {
    if (i) r.text += "\n\n";
    r.text += "Title: " + hits[i].title + "\nLink: " + hits[i].link + "\nSnippet: " + hits[i].snippet;
    r.structured.push_back({{"title", hits[i].title}, {"link", hits[i].link}, {"snippet", hits[i].snippet}});
  }
  return r;
}

// "https://en.wikipedia.org/w/rest.php/v1" -> "https://en.wikipedia.org/wiki/".
std::string wiki_article_base(const std::string& api) {
  static const std::regex re(R"(^(https?://[^/]+))");
  std::smatch m;
  return std::regex_search(api, m, re) ? m[1].str() + "/wiki/" : "/wiki/";
}

ToolResult wikipedia(const ToolEnv& env, const std::string& query) {
  const Json j = detail::web(env).get_json(env.endpoints.wikipedia + "/search/page?q=" + percent_encode(query) +
                                           "&limit=" + std::to_string(env.limits.top_k));
  std::vector<Hit> hits;
  for (const Json& p : json_path(j, {"pages"})) {
    std::string snippet = detail::strip_tags(json_text(p, "excerpt"));
    const std::string desc = json_text(p, "description");
    if (!desc.empty()) snippet = desc + ". " + snippet;
    hits.push_back({json_text(p, "title"), wiki_article_base(env.endpoints.wikipedia) + json_text(p, "key"),
                    text::collapse_whitespace(snippet)});
  }
  return render_hits("Wikipedia Search", query, hits);
}

ToolResult web_search(const ToolEnv& env, const std::string& query) {
  const Json j = detail::web(env).get_json(env.endpoints.web_search + "?q=" + percent_encode(query) + "&format=json");
  std::vector<Hit> hits;
  for (const Json& p : json_path(j, {"results"})) {
    if (static_cast<int>(hits.size()) == env.limits.top_k) break;
    hits.push_back({json_text(p, "title"), json_text(p, "url"), text::collapse_whitespace(json_text(p, "content"))});
  }
  return render_hits("Web Search", query, hits);
}

// PMID -> abstract text, from an efetch PubmedArticleSet document.
std::map<std::string, std::string> parse_abstracts(const std::string& xml) {
  static const std::regex article(R"(<PubmedArticle>([\s\S]*?)</PubmedArticle>)");
  static const std::regex pmid(R"(<PMID[^>]*>(\d+)</PMID>)");
  static const std::regex abstract_text(R"(<AbstractText([^>]*)>([\s\S]*?)</AbstractText>)");
  static const std::regex label(R"re(Label="([^"]*)")re");
  std::map<std::string, std::string> out;
  for (std::sregex_iterator it(xml.begin(), xml.end(), article), end; it != end; ++it) {
    const std::string body = (*it)[1].str();
    std::smatch m;
    if (!std::regex_search(body, m, pmid)) continue;
    std::string text;
    for (std::sregex_iterator a(body.begin(), body.end(), abstract_text); a != end; ++a) {
      std::smatch lm;
      const std::string attrs = (*a)[1].str();
      if (!text.empty()) text += " ";
      if (std::regex_search(attrs, lm, label)) text += lm[1].str() + ": ";
      text += detail::strip_tags((*a)[2].str());
    }
    out[m[1].str()] = text::collapse_whitespace(text);
  }
  return out;
}

ToolResult pubmed(const ToolEnv& env, const std::string& query) {
  ServiceClient& web = detail::web(env);
  const std::string base = env.endpoints.eutils;
  const Json search = web.get_json(base + "/esearch.fcgi?db=pubmed&retmode=json&retmax=" +
                                   std::to_string(env.limits.top_k) + "&term=" + percent_encode(query));
  std::vector<std::string> ids;
  for (const Json& id : json_path(search, {"esearchresult", "idlist"}))
    if (id.is_string()) ids.push_back(id.get<std::string>());
  ToolResult r{"PubMed Search", "", Json::array(), ResultSource::kExternalService};
  if (ids.empty()) {
    r.text = "No PubMed articles found for '" + query + "'.";
    return r;
  }
  std::string id_list;
  for (const auto& id : ids) id_list += (id_list.empty() ? "" : ",") + id;
  const Json summary = web.get_json(base + "/esummary.fcgi?db=pubmed&retmode=json&id=" + id_list);
  std::map<std::string, std::string> abstracts;
  try {
    abstracts = parse_abstracts(web.get(base + "/efetch.fcgi?db=pubmed&retmode=xml&rettype=abstract&id=" + id_list));
  } catch (const NotFound&) {
  }
  for (const std::string& id : ids) {
    const Json& rec = json_path(summary, {"result", id});
    if (!rec.is_object()) continue;
    std::string authors;
    const Json& list = json_path(rec, {"authors"});
    std::size_t n = 0;
    for (const Json& a : list) {
      if (n == 6) {
        authors += ", et al.";
        break;
      }
      authors += (n++ ? ", " : "") + json_text(a, "name");
    }
    std::string journal = json_text(rec, "fulljournalname");
    if (journal.empty()) journal = json_text(rec, "source");
    const std::string abstract = detail::cap_text(abstracts[id], env.limits.abstract_cap);
    if (!r.text.empty()) r.text += "\n\n";
    r.text += "PMID: " + id + "\nTitle: " + json_text(rec, "title") + "\nAuthors: " + authors +
              "\nJournal: " + journal + "\nDate: " + json_text(rec, "pubdate") +
              "\nAbstract: " + (abstract.empty() ? "(none)" : abstract);
    r.structured.push_back({{"pmid", id},
                            {"title", json_text(rec, "title")},
                            {"authors", authors},
                            {"journal", journal},
                            {"date", json_text(rec, "pubdate")},
                            {"abstract", abstract}});
  }
  if (r.text.empty()) r.text = "No PubMed articles found for '" + query + "'.";
  return r;
}

}  // namespace

ToolResult search_tool(SearchKind kind, const ToolEnv& env, const std::string& query) {
  const std::string q(text::trim(query));
  if (q.empty()) throw InvalidInput("search query must not be empty");
  switch (kind) {
    case SearchKind::kWikipedia: return wikipedia(env, q);
    case SearchKind::kPubMed: return pubmed(env, q);
    case SearchKind::kWeb: return web_search(env, q);
  }
  throw std::logic_error("unreachable");
}

ToolResult html_fetch(const ToolEnv& env, const std::string& url) {
  const std::string u(text::trim(url));
  if (u.rfind("http://", 0) != 0 && u.rfind("https://", 0) != 0)
    throw InvalidInput("HTML Fetch needs an http(s) URL, got '" + u + "'");
  const WebResponse resp = detail::web(env).request({"GET", u, "", ""});
  if (resp.status < 200 || resp.status >= 300) throw FetchFailed(resp.status);
  ToolResult r{"HTML Fetch", resp.body, Json::object(), ResultSource::kExternalService};
  const bool truncated = resp.body.size() > env.limits.html_cap;
  if (truncated) {
    r.text = resp.body.substr(0, env.limits.html_cap) + "\n[truncated: showing " +
             std::to_string(env.limits.html_cap) + " of " + std::to_string(resp.body.size()) + " bytes]";
  }
  if (r.text.empty()) r.text = "(empty response body)";
  r.structured = {{"status", resp.status}, {"bytes", resp.body.size()}, {"truncated", truncated}};
  return r;
}

}  // namespace txbench::tools

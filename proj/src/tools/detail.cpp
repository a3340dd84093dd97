#include "detail.hpp"

#include <regex>

#include "txbench/common/text.hpp"

namespace txbench::tools::detail {

std::string require(const ToolInput& in, const std::string& key) {
  auto it = in.find(key);
  if (it == in.end() || text::trim(it->second).empty()) throw InvalidInput("missing input '" + key + "'");
  return std::string(text::trim(it->second));
}

std::string optional_input(const ToolInput& in, const std::string& key, const std::string& fallback) {
  auto it = in.find(key);
  if (it == in.end() || text::trim(it->second).empty()) return fallback;
  return std::string(text::trim(it->second));
}

std::string json_text(const Json& j, const std::string& key) {
  if (!j.is_object()) return {};
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return {};
  if (it->is_string()) return it->get<std::string>();
  if (it->is_number() || it->is_boolean()) return it->dump();
  return {};
}

const Json& json_path(const Json& j, std::initializer_list<std::string_view> path) {
  static const Json null_json;
  const Json* cur = &j;
  for (std::string_view step : path) {
    if (cur->is_object()) {
      auto it = cur->find(std::string(step));
      if (it == cur->end()) return null_json;
      cur = &*it;
    } else if (cur->is_array()) {
      std::size_t idx = 0;
      for (char c : step) {
        if (c < '0' || c > '9') return null_json;
        idx = idx * 10 + static_cast<std::size_t>(c - '0');
      }
      if (idx >= cur->size()) return null_json;
      cur = &(*cur)[idx];
    } else {
      return null_json;
    }
  }
  return *cur;
}

std::string strip_tags(std::string_view html) {
  static const std::regex tag("<[^>]*>");
  return xml_unescape(std::regex_replace(std::string(html), tag, ""));
}

std::string xml_unescape(std::string_view s) {
  std::string out(s);
  const std::pair<const char*, const char*> entities[] = {
      {"&lt;", "<"}, {"&gt;", ">"}, {"&quot;", "\""}, {"&apos;", "'"}, {"&#39;", "'"}, {"&amp;", "&"}};
  for (const auto& [from, to] : entities) {
    const std::string f(from), t(to);
    for (std::size_t pos = out.find(f); pos != std::string::npos; pos = out.find(f, pos + t.size()))
      out.replace(pos, f.size(), t);
  }
  return out;
}

std::string cap_text(std::string_view s, std::size_t cap) {
  if (s.size() <= cap) return std::string(s);
  std::size_t cut = cap;
  // Do not split a UTF-8 sequence.
  while (cut > 0 && (static_cast<unsigned char>(s[cut]) & 0xC0) == 0x80) --cut;
  return std::string(s.substr(0, cut)) + "...";
}

ServiceClient& web(const ToolEnv& env) {
  if (!env.web) throw ServiceUnavailable("no web transport configured");
  return *env.web;
}

}  // namespace txbench::tools::detail

#pragma once

#include <string>
#include <string_view>

#include "txbench/common/json.hpp"
#include "txbench/tools/tools.hpp"

namespace txbench::tools::detail {

// Trimmed value of a required input field. Throws InvalidInput when absent.
std::string require(const ToolInput& in, const std::string& key);
std::string optional_input(const ToolInput& in, const std::string& key, const std::string& fallback);

// Strings as-is, numbers through dump(), anything else empty. Never throws.
std::string json_text(const Json& j, const std::string& key);
// Walks object keys and array indices; returns null for any missing step.
const Json& json_path(const Json& j, std::initializer_list<std::string_view> path);

std::string strip_tags(std::string_view html);
std::string xml_unescape(std::string_view s);
std::string cap_text(std::string_view s, std::size_t cap);

ServiceClient& web(const ToolEnv& env);

}  // namespace txbench::tools::detail

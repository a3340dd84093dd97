#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace txbench::text {

std::string_view trim(std::string_view s);

// Trims and collapses every run of whitespace into a single space.
std::string collapse_whitespace(std::string_view s);

std::string to_lower(std::string_view s);
std::string to_upper(std::string_view s);

std::vector<std::string> split(std::string_view s, char sep);

bool starts_with_icase(std::string_view s, std::string_view prefix);

std::string hex_encode(const unsigned char* data, std::size_t n);

}  // namespace txbench::text

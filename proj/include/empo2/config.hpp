#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace empo2 {

// Ordered key=value pairs. Later duplicates override earlier ones on apply.
using KeyValues = std::vector<std::pair<std::string, std::string>>;

// One `key = value` per line; blank lines and `#` comments are skipped.
// Throws FormatError with the line number on anything else.
KeyValues parse_key_values(std::string_view text);
KeyValues load_key_values(const std::filesystem::path& path);
std::string format_key_values(const KeyValues& kv);

// Comma-separated lists and inclusive ranges: "0-4", "1,3,5-7".
std::vector<std::uint64_t> parse_index_list(std::string_view text);
std::string format_index_list(const std::vector<std::uint64_t>& v);
std::vector<double> parse_double_list(std::string_view text);

}  // namespace empo2

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace camf {

/// One `key = value` entry with its source line.
struct KeyValue {
  std::string key;
  std::string value;
  std::size_t line = 0;
};

/// Parses `key = value` lines. `#` starts a comment; blank lines are skipped;
/// keys and values are trimmed. Throws IoError on a line without `=`.
[[nodiscard]] std::vector<KeyValue> parse_key_values(const std::string& text, const std::string& origin);
[[nodiscard]] std::vector<KeyValue> read_key_values(const std::filesystem::path& path);

[[nodiscard]] double parse_real(const KeyValue& kv, const std::string& origin);
[[nodiscard]] std::int64_t parse_integer(const KeyValue& kv, const std::string& origin);

} // namespace camf

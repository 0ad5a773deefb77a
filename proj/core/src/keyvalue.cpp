#include "camf/keyvalue.hpp"

#include "camf/error.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace camf {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) {
    return {};
  }
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

} // namespace

std::vector<KeyValue> parse_key_values(const std::string& text, const std::string& origin) {
  std::vector<KeyValue> out;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view body(line);
    if (const auto hash = body.find('#'); hash != std::string_view::npos) {
      body = body.substr(0, hash);
    }
    if (trim(body).empty()) {
      continue;
    }
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) {
      throw IoError(origin + ":" + std::to_string(line_no) + ": expected 'key = value'");
    }
    KeyValue kv{trim(body.substr(0, eq)), trim(body.substr(eq + 1)), line_no};
    if (kv.key.empty()) {
      throw IoError(origin + ":" + std::to_string(line_no) + ": empty key");
    }
    out.push_back(std::move(kv));
  }
  return out;
}

std::vector<KeyValue> read_key_values(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open '" + path.string() + "'");
  }
  std::ostringstream text;
  text << in.rdbuf();
  return parse_key_values(text.str(), path.string());
}

double parse_real(const KeyValue& kv, const std::string& origin) {
  double v = 0.0;
  const char* end = kv.value.data() + kv.value.size();
  auto [ptr, ec] = std::from_chars(kv.value.data(), end, v);
  if (ec != std::errc() || ptr != end || kv.value.empty()) {
    throw IoError(origin + ":" + std::to_string(kv.line) + ": '" + kv.key + "' expects a number, got '" +
                  kv.value + "'");
  }
  return v;
}

std::int64_t parse_integer(const KeyValue& kv, const std::string& origin) {
  std::int64_t v = 0;
  const char* end = kv.value.data() + kv.value.size();
  auto [ptr, ec] = std::from_chars(kv.value.data(), end, v);
  if (ec != std::errc() || ptr != end || kv.value.empty()) {
    throw IoError(origin + ":" + std::to_string(kv.line) + ": '" + kv.key +
                  "' expects an integer, got '" + kv.value + "'");
  }
  return v;
}

} // namespace camf

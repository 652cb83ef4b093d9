// SPDX-License-Identifier: Apache-2.0
#include "flowcond/toml.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace flowcond::toml {

namespace {

[[noreturn]] void fail(std::size_t line, const std::string& what) {
  throw std::runtime_error("toml: line " + std::to_string(line) + ": " + what);
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

// strips a trailing comment, respecting quoted strings
std::string_view strip_comment(std::string_view s) {
  bool in_string = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"') in_string = !in_string;
    if (s[i] == '#' && !in_string) return s.substr(0, i);
  }
  return s;
}

Value parse_value(std::string_view raw, std::size_t line) {
  if (raw.empty()) fail(line, "missing value");
  if (raw.front() == '"') {
    if (raw.size() < 2 || raw.back() != '"') fail(line, "unterminated string");
    return std::string(raw.substr(1, raw.size() - 2));
  }
  if (raw == "true") return true;
  if (raw == "false") return false;

  const std::string text(raw);
  const bool looks_integer =
      text.find_first_of(".eEnN") == std::string::npos;  // no dot/exponent/nan-inf
  char* end = nullptr;
  if (looks_integer) {
    const long long v = std::strtoll(text.c_str(), &end, 10);
    if (end && *end == '\0') return static_cast<std::int64_t>(v);
  }
  const double d = std::strtod(text.c_str(), &end);
  if (end && *end == '\0') return d;
  fail(line, "cannot parse value '" + text + "'");
}

}  // namespace

Document parse(const std::string& text) {
  Document doc;
  std::string section;
  std::istringstream in(text);
  std::string raw_line;
  std::size_t line_no = 0;

  while (std::getline(in, raw_line)) {
    ++line_no;
    std::string_view line = trim(strip_comment(raw_line));
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') fail(line_no, "unterminated section header");
      const std::string_view name = trim(line.substr(1, line.size() - 2));
      if (name.empty()) fail(line_no, "empty section name");
      section = std::string(name);
      doc[section];  // section may stay empty
      continue;
    }

    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) fail(line_no, "expected key = value");
    const std::string key{trim(line.substr(0, eq))};
    if (key.empty()) fail(line_no, "empty key");
    if (doc[section].count(key)) fail(line_no, "duplicate key '" + key + "'");
    doc[section][key] = parse_value(trim(line.substr(eq + 1)), line_no);
  }
  return doc;
}

Document parse_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("toml: cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

std::string type_name(const Value& v) {
  switch (v.index()) {
    case 0: return "integer";
    case 1: return "float";
    case 2: return "boolean";
    default: return "string";
  }
}

}  // namespace flowcond::toml

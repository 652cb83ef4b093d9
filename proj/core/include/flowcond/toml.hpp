// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <variant>

namespace flowcond::toml {

using Value = std::variant<std::int64_t, double, bool, std::string>;

/// Section name -> key -> value. Keys before any [section] land in "".
using Document = std::map<std::string, std::map<std::string, Value>>;

/// Minimal TOML subset: [sections], key = value with integers, floats,
/// booleans and double-quoted strings, # comments. Errors carry the line
/// number.
Document parse(const std::string& text);
Document parse_file(const std::filesystem::path& path);

std::string type_name(const Value& v);

}  // namespace flowcond::toml

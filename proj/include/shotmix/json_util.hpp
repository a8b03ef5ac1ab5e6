#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace shotmix {

using Json = nlohmann::json;

/// Strict field accessors: missing or mistyped fields raise ParseError with
/// the document context in the message.
const Json& require_field(const Json& j, const char* key, const std::string& ctx);
std::string require_string(const Json& j, const char* key, const std::string& ctx);
double require_number(const Json& j, const char* key, const std::string& ctx);
std::vector<double> require_number_array(const Json& j, const char* key,
                                         const std::string& ctx);
std::vector<std::string> require_string_array(const Json& j, const char* key,
                                              const std::string& ctx);

Json parse_json(const std::string& text, const std::string& ctx);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

/// One JSON document per LF-terminated line; blank lines rejected.
std::vector<Json> read_jsonl(const std::string& path);
void write_jsonl(const std::string& path, const std::vector<Json>& records);

}  // namespace shotmix

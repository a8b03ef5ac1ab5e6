#include "shotmix/json_util.hpp"

#include <fstream>
#include <sstream>

#include "shotmix/error.hpp"

namespace shotmix {

const Json& require_field(const Json& j, const char* key, const std::string& ctx) {
  if (!j.is_object()) fail_parse(ctx + ": expected an object");
  auto it = j.find(key);
  if (it == j.end()) fail_parse(ctx + ": missing field '" + key + "'");
  return *it;
}

std::string require_string(const Json& j, const char* key, const std::string& ctx) {
  const Json& f = require_field(j, key, ctx);
  if (!f.is_string()) fail_parse(ctx + ": field '" + key + "' must be a string");
  return f.get<std::string>();
}

double require_number(const Json& j, const char* key, const std::string& ctx) {
  const Json& f = require_field(j, key, ctx);
  if (!f.is_number()) fail_parse(ctx + ": field '" + key + "' must be a number");
  return f.get<double>();
}

std::vector<double> require_number_array(const Json& j, const char* key,
                                         const std::string& ctx) {
  const Json& f = require_field(j, key, ctx);
  if (!f.is_array()) fail_parse(ctx + ": field '" + key + "' must be an array");
  std::vector<double> out;
  out.reserve(f.size());
  for (const auto& v : f) {
    if (!v.is_number())
      fail_parse(ctx + ": field '" + key + "' must contain only numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

std::vector<std::string> require_string_array(const Json& j, const char* key,
                                              const std::string& ctx) {
  const Json& f = require_field(j, key, ctx);
  if (!f.is_array()) fail_parse(ctx + ": field '" + key + "' must be an array");
  std::vector<std::string> out;
  out.reserve(f.size());
  for (const auto& v : f) {
    if (!v.is_string())
      fail_parse(ctx + ": field '" + key + "' must contain only strings");
    out.push_back(v.get<std::string>());
  }
  return out;
}

Json parse_json(const std::string& text, const std::string& ctx) {
  Json j = Json::parse(text, nullptr, false);
  if (j.is_discarded()) fail_parse(ctx + ": malformed JSON");
  return j;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail_io("cannot open for reading: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) fail_io("read failure: " + path);
  return buf.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail_io("cannot open for writing: " + path);
  out << content;
  if (!out) fail_io("write failure: " + path);
}

std::vector<Json> read_jsonl(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail_io("cannot open for reading: " + path);
  std::vector<Json> records;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty())
      fail_parse(path + ":" + std::to_string(lineno) + ": blank line in JSONL");
    Json j = Json::parse(line, nullptr, false);
    if (j.is_discarded())
      fail_parse(path + ":" + std::to_string(lineno) + ": malformed JSON line");
    records.push_back(std::move(j));
  }
  if (in.bad()) fail_io("read failure: " + path);
  return records;
}

void write_jsonl(const std::string& path, const std::vector<Json>& records) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail_io("cannot open for writing: " + path);
  for (const auto& r : records) out << r.dump() << '\n';
  if (!out) fail_io("write failure: " + path);
}

}  // namespace shotmix

#pragma once

#include <string>
#include <string_view>

#include <json.hpp>

#include "taskgrid/errors.hpp"

namespace taskgrid::detail {

using Json = nlohmann::json;

inline std::string join_path(std::string_view base, std::string_view key) {
  if (base.empty()) return std::string(key);
  return std::string(base) + "." + std::string(key);
}

inline Json parse_json(std::string_view text, std::string_view what) {
  try {
    return Json::parse(text.begin(), text.end());
  } catch (const Json::parse_error& e) {
    throw ParseError(std::string(what), e.what());
  }
}

inline const Json& require(const Json& obj, std::string_view key,
                           std::string_view path = {}) {
  if (!obj.is_object()) throw ParseError(std::string(path), "expected object");
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(join_path(path, key), "missing field");
  return *it;
}

inline const Json* optional_field(const Json& obj, std::string_view key) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return nullptr;
  return &*it;
}

inline std::string as_string(const Json& v, std::string_view path) {
  if (!v.is_string()) throw ParseError(std::string(path), "expected string");
  return v.get<std::string>();
}

inline long long as_int(const Json& v, std::string_view path) {
  if (!v.is_number_integer())
    throw ParseError(std::string(path), "expected integer");
  return v.get<long long>();
}

inline double as_number(const Json& v, std::string_view path) {
  if (!v.is_number()) throw ParseError(std::string(path), "expected number");
  return v.get<double>();
}

inline bool as_bool(const Json& v, std::string_view path) {
  if (!v.is_boolean()) throw ParseError(std::string(path), "expected boolean");
  return v.get<bool>();
}

inline const Json& as_array(const Json& v, std::string_view path) {
  if (!v.is_array()) throw ParseError(std::string(path), "expected array");
  return v;
}

inline std::string get_string(const Json& obj, std::string_view key,
                              std::string_view path = {}) {
  return as_string(require(obj, key, path), join_path(path, key));
}

inline long long get_int(const Json& obj, std::string_view key,
                         std::string_view path = {}) {
  return as_int(require(obj, key, path), join_path(path, key));
}

inline void check_version(const Json& doc, std::string_view key, int expected) {
  auto v = get_int(doc, key);
  if (v != expected)
    throw ParseError(std::string(key),
                     "unsupported version " + std::to_string(v));
}

}  // namespace taskgrid::detail

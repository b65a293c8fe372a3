#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "enertree/error.hpp"
#include "enertree/features.hpp"

namespace enertree::detail {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

inline json parse_json(std::string_view document, std::string_view what) {
  try {
    return json::parse(document);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string(what) + ": " + e.what());
  }
}

inline const json& require(const json& obj, std::string_view key, std::string_view where) {
  if (!obj.is_object()) throw ParseError(std::string(where) + " is not an object");
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw ParseError(std::string(where) + ": missing key '" + std::string(key) + "'");
  }
  return *it;
}

inline double as_double(const json& v, std::string_view where) {
  if (!v.is_number()) throw ParseError(std::string(where) + " must be a number");
  return v.get<double>();
}

inline std::int64_t as_int(const json& v, std::string_view where) {
  if (v.is_number_integer()) return v.get<std::int64_t>();
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (d == static_cast<double>(static_cast<std::int64_t>(d))) return static_cast<std::int64_t>(d);
  }
  throw ParseError(std::string(where) + " must be an integer");
}

inline std::string as_string(const json& v, std::string_view where) {
  if (!v.is_string()) throw ParseError(std::string(where) + " must be a string");
  return v.get<std::string>();
}

inline std::vector<double> as_double_array(const json& v, std::string_view where) {
  if (!v.is_array()) throw ParseError(std::string(where) + " must be an array");
  std::vector<double> out;
  out.reserve(v.size());
  for (const auto& x : v) out.push_back(as_double(x, where));
  return out;
}

inline std::string dump(const ordered_json& j) { return j.dump(2) + "\n"; }

}  // namespace enertree::detail

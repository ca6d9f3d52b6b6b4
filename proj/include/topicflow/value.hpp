#pragma once

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

namespace topicflow {

/// Session/user attribute value. Restricted to types that serialize portably.
using AttributeValue = std::variant<std::string, double, bool, std::vector<std::string>>;
using AttributeMap = std::map<std::string, AttributeValue>;

inline nlohmann::json attribute_to_json(const AttributeValue& v) {
  return std::visit([](const auto& x) { return nlohmann::json(x); }, v);
}

inline AttributeValue attribute_from_json(const nlohmann::json& j) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_boolean()) return j.get<bool>();
  if (j.is_number()) return j.get<double>();
  if (j.is_array()) return j.get<std::vector<std::string>>();
  throw nlohmann::json::type_error::create(302, "unsupported attribute value " + j.dump(), &j);
}

inline nlohmann::json attributes_to_json(const AttributeMap& m) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, v] : m) j[k] = attribute_to_json(v);
  return j;
}

inline AttributeMap attributes_from_json(const nlohmann::json& j) {
  AttributeMap m;
  for (const auto& [k, v] : j.items()) m.emplace(k, attribute_from_json(v));
  return m;
}

inline std::optional<std::string> get_string(const AttributeMap& m, const std::string& key) {
  auto it = m.find(key);
  if (it == m.end()) return std::nullopt;
  if (const auto* s = std::get_if<std::string>(&it->second)) return *s;
  return std::nullopt;
}

inline std::optional<double> get_number(const AttributeMap& m, const std::string& key) {
  auto it = m.find(key);
  if (it == m.end()) return std::nullopt;
  if (const auto* d = std::get_if<double>(&it->second)) return *d;
  return std::nullopt;
}

}  // namespace topicflow

#pragma once

#include "openrate/core.hpp"

#include <json.hpp>

#include <initializer_list>
#include <string>

namespace openrate {

/// Rejects keys of `j` outside `allowed`. `where` names the object in the
/// error message, e.g. "hole".
inline void require_known_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                               const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& item : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || item.key() == a;
    if (!ok) throw ConfigError(where + ": unknown key '" + item.key() + "'");
  }
}

/// j.at(key) with the field path in the error message.
template <typename T>
T require_field(const nlohmann::json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw ConfigError(where + "." + key + ": missing");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

template <typename T>
T optional_field(const nlohmann::json& j, const char* key, T fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  return require_field<T>(j, key, where);
}

}  // namespace openrate

#pragma once

#include <cstdint>
#include <initializer_list>
#include <string>
#include <string_view>

#include "lifexp/errors.hpp"

namespace lifexp::detail {

// nlohmann's get<unsigned> wraps negative numbers silently.
template <class Json>
std::uint64_t unsigned_field(const Json& v, const std::string& name) {
  if (v.is_number_unsigned()) return v.template get<std::uint64_t>();
  if (v.is_number_integer() && v.template get<std::int64_t>() >= 0) return v.template get<std::uint64_t>();
  throw ConfigError(name + " must be a non-negative integer, got " + v.dump());
}

template <class Json>
void reject_unknown_keys(const Json& doc, std::initializer_list<std::string_view> known, const std::string& where) {
  if (!doc.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& item : doc.items()) {
    bool found = false;
    for (auto k : known) found = found || item.key() == k;
    if (!found) throw ConfigError(where + ": unknown key '" + item.key() + "'");
  }
}

}  // namespace lifexp::detail

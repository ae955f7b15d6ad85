#pragma once

#include <string>

#include <json.hpp>

#include "structbias/util.hpp"

namespace structbias {

// Canonical rendering: keys sorted, two-space indent, floats with 12
// significant digits, trailing newline. Independent of the C locale.
inline void canonical_dump_into(const nlohmann::json& j, int indent, std::string& out) {
  const std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
  const std::string inner(static_cast<std::size_t>(indent + 1) * 2, ' ');
  switch (j.type()) {
    case nlohmann::json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {  // std::map order
        if (!first) out += ",\n";
        first = false;
        out += inner + nlohmann::json(it.key()).dump() + ": ";
        canonical_dump_into(it.value(), indent + 1, out);
      }
      out += "\n" + pad + "}";
      return;
    }
    case nlohmann::json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      out += "[\n";
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) out += ",\n";
        out += inner;
        canonical_dump_into(j[i], indent + 1, out);
      }
      out += "\n" + pad + "]";
      return;
    }
    case nlohmann::json::value_t::number_float:
      out += util::format_double(j.get<double>());
      return;
    default:
      out += j.dump();
      return;
  }
}

inline std::string canonical_dump(const nlohmann::json& j) {
  std::string out;
  canonical_dump_into(j, 0, out);
  out += '\n';
  return out;
}

}  // namespace structbias

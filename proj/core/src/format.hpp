#pragma once

#include <charconv>
#include <string>

namespace prada::detail {

// Shortest text that parses back to the same double.
inline std::string format_double(double value) {
  char buffer[32];
  const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return {buffer, result.ptr};
}

}  // namespace prada::detail

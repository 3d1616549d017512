#pragma once

#include <charconv>
#include <stdexcept>
#include <string>
#include <system_error>

namespace hetune {

/// Raised for invalid inputs and failed operations across the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shortest decimal text that parses back to exactly `value`.
inline std::string format_double(double value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc{}) throw Error("cannot format floating-point value");
  return std::string(buf, end);
}

/// Fixed-point text with `digits` decimals, for human-readable tables.
inline std::string format_fixed(double value, int digits) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value,
                                 std::chars_format::fixed, digits);
  if (ec != std::errc{}) throw Error("cannot format floating-point value");
  return std::string(buf, end);
}

}  // namespace hetune

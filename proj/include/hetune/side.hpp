#pragma once

#include <array>
#include <string>
#include <string_view>

#include "hetune/error.hpp"

namespace hetune {

enum class Side { host, device };

inline constexpr std::array<Side, 2> kSides = {Side::host, Side::device};

inline std::string_view to_string(Side side) {
  return side == Side::host ? "host" : "device";
}

inline Side side_from_string(std::string_view text) {
  if (text == "host") return Side::host;
  if (text == "device") return Side::device;
  throw Error("unknown side '" + std::string(text) + "' (expected host|device)");
}

}  // namespace hetune

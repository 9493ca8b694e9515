#pragma once

#include <cstdint>
#include <vector>

namespace d2 {

using Color = std::int64_t;
inline constexpr Color kLive = -1;

/// node → color, kLive for nodes without a color.
using Coloring = std::vector<Color>;

/// node → part index in [0, parts).
struct Partition {
  std::vector<std::uint32_t> part_of;
  std::uint32_t parts = 1;

  static Partition trivial(std::size_t n) { return {std::vector<std::uint32_t>(n, 0), 1}; }
};

enum class Side : std::uint8_t { red = 0, blue = 1 };

}  // namespace d2

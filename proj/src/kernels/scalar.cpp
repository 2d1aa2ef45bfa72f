#include "psival/kernels/kernels.hpp"

#include <algorithm>

namespace psival::kernels::scalar {

void combine_keys(std::span<const std::uint32_t> major, std::uint32_t radix,
                  std::span<const std::uint32_t> minor, std::span<std::uint32_t> out) {
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = major[i] * radix + minor[i];
}

std::uint32_t max_value(std::span<const std::uint32_t> values) {
  std::uint32_t m = 0;
  for (std::uint32_t v : values) m = std::max(m, v);
  return m;
}

}  // namespace psival::kernels::scalar

#include <arm_neon.h>

#include <algorithm>

#include "psival/kernels/kernels.hpp"

namespace psival::kernels::neon {

void combine_keys(std::span<const std::uint32_t> major, std::uint32_t radix,
                  std::span<const std::uint32_t> minor, std::span<std::uint32_t> out) {
  const std::size_t n = out.size();
  const uint32x4_t vradix = vdupq_n_u32(radix);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const uint32x4_t hi = vld1q_u32(major.data() + i);
    const uint32x4_t lo = vld1q_u32(minor.data() + i);
    vst1q_u32(out.data() + i, vmlaq_u32(lo, hi, vradix));
  }
  for (; i < n; ++i) out[i] = major[i] * radix + minor[i];
}

std::uint32_t max_value(std::span<const std::uint32_t> values) {
  const std::size_t n = values.size();
  uint32x4_t acc = vdupq_n_u32(0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) acc = vmaxq_u32(acc, vld1q_u32(values.data() + i));
  std::uint32_t m = vmaxvq_u32(acc);
  for (; i < n; ++i) m = std::max(m, values[i]);
  return m;
}

}  // namespace psival::kernels::neon

// Compiled with -mavx2; only called after a runtime CPU check.
#include <immintrin.h>

#include <algorithm>

#include "psival/kernels/kernels.hpp"

namespace psival::kernels::avx2 {

void combine_keys(std::span<const std::uint32_t> major, std::uint32_t radix,
                  std::span<const std::uint32_t> minor, std::span<std::uint32_t> out) {
  const std::size_t n = out.size();
  const __m256i vradix = _mm256_set1_epi32(static_cast<int>(radix));
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256i hi = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(major.data() + i));
    const __m256i lo = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(minor.data() + i));
    // mullo keeps the low 32 bits, matching unsigned wraparound.
    const __m256i key = _mm256_add_epi32(_mm256_mullo_epi32(hi, vradix), lo);
    _mm256_storeu_si256(reinterpret_cast<__m256i*>(out.data() + i), key);
  }
  for (; i < n; ++i) out[i] = major[i] * radix + minor[i];
}

std::uint32_t max_value(std::span<const std::uint32_t> values) {
  const std::size_t n = values.size();
  __m256i acc = _mm256_setzero_si256();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc = _mm256_max_epu32(acc, _mm256_loadu_si256(reinterpret_cast<const __m256i*>(values.data() + i)));
  }
  alignas(32) std::uint32_t lanes[8];
  _mm256_store_si256(reinterpret_cast<__m256i*>(lanes), acc);
  std::uint32_t m = *std::max_element(lanes, lanes + 8);
  for (; i < n; ++i) m = std::max(m, values[i]);
  return m;
}

}  // namespace psival::kernels::avx2

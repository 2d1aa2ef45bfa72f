#include <atomic>
#include <cstdlib>

#include "psival/errors.hpp"
#include "psival/kernels/kernels.hpp"

namespace psival::kernels {

namespace {

bool cpu_has(Isa isa) noexcept {
  switch (isa) {
    case Isa::Scalar:
      return true;
    case Isa::Avx2:
#if defined(PSIVAL_HAVE_AVX2_KERNELS)
      return __builtin_cpu_supports("avx2");
#else
      return false;
#endif
    case Isa::Neon:
#if defined(PSIVAL_HAVE_NEON_KERNELS)
      return true;  // baseline on aarch64
#else
      return false;
#endif
  }
  return false;
}

Isa auto_select() noexcept {
  if (const char* env = std::getenv("PSIVAL_SIMD")) {
    if (auto requested = parse_isa(env); requested && cpu_has(*requested)) return *requested;
  }
  if (cpu_has(Isa::Avx2)) return Isa::Avx2;
  if (cpu_has(Isa::Neon)) return Isa::Neon;
  return Isa::Scalar;
}

// -1: automatic.
std::atomic<int> g_override{-1};

}  // namespace

std::string_view to_string(Isa isa) noexcept {
  switch (isa) {
    case Isa::Scalar:
      return "scalar";
    case Isa::Avx2:
      return "avx2";
    case Isa::Neon:
      return "neon";
  }
  return "scalar";
}

std::optional<Isa> parse_isa(std::string_view name) noexcept {
  if (name == "scalar") return Isa::Scalar;
  if (name == "avx2") return Isa::Avx2;
  if (name == "neon") return Isa::Neon;
  return std::nullopt;
}

bool isa_supported(Isa isa) noexcept { return cpu_has(isa); }

Isa active_isa() noexcept {
  const int forced = g_override.load(std::memory_order_relaxed);
  if (forced >= 0) return static_cast<Isa>(forced);
  static const Isa selected = auto_select();
  return selected;
}

void set_isa_override(std::optional<Isa> isa) {
  if (isa && !cpu_has(*isa)) {
    throw ConfigError("SIMD variant " + std::string(to_string(*isa)) + " is not available");
  }
  g_override.store(isa ? static_cast<int>(*isa) : -1, std::memory_order_relaxed);
}

void combine_keys(std::span<const std::uint32_t> major, std::uint32_t radix,
                  std::span<const std::uint32_t> minor, std::span<std::uint32_t> out) {
  switch (active_isa()) {
#if defined(PSIVAL_HAVE_AVX2_KERNELS)
    case Isa::Avx2:
      return avx2::combine_keys(major, radix, minor, out);
#endif
#if defined(PSIVAL_HAVE_NEON_KERNELS)
    case Isa::Neon:
      return neon::combine_keys(major, radix, minor, out);
#endif
    default:
      return scalar::combine_keys(major, radix, minor, out);
  }
}

std::uint32_t max_value(std::span<const std::uint32_t> values) {
  switch (active_isa()) {
#if defined(PSIVAL_HAVE_AVX2_KERNELS)
    case Isa::Avx2:
      return avx2::max_value(values);
#endif
#if defined(PSIVAL_HAVE_NEON_KERNELS)
    case Isa::Neon:
      return neon::max_value(values);
#endif
    default:
      return scalar::max_value(values);
  }
}

}  // namespace psival::kernels

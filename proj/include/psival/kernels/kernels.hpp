#pragma once

// Row-parallel integer kernels used by the intersection counter.
//
// Each kernel has a scalar reference in namespace `scalar` and optional
// vector variants. The unqualified entry points dispatch to the best variant
// the CPU supports, unless overridden through set_isa_override() or the
// PSIVAL_SIMD environment variable (scalar | avx2 | neon).

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>

namespace psival::kernels {

enum class Isa { Scalar, Avx2, Neon };

std::string_view to_string(Isa isa) noexcept;
std::optional<Isa> parse_isa(std::string_view name) noexcept;

/// Compiled into this binary and supported by the running CPU.
bool isa_supported(Isa isa) noexcept;
Isa active_isa() noexcept;
/// nullopt restores automatic selection. Throws ConfigError for an
/// unsupported ISA.
void set_isa_override(std::optional<Isa> isa);

/// out[i] = major[i] * radix + minor[i]  (mod 2^32). All spans equal length.
void combine_keys(std::span<const std::uint32_t> major, std::uint32_t radix,
                  std::span<const std::uint32_t> minor, std::span<std::uint32_t> out);

/// Largest element, or 0 for an empty span.
std::uint32_t max_value(std::span<const std::uint32_t> values);

namespace scalar {
void combine_keys(std::span<const std::uint32_t> major, std::uint32_t radix,
                  std::span<const std::uint32_t> minor, std::span<std::uint32_t> out);
std::uint32_t max_value(std::span<const std::uint32_t> values);
}  // namespace scalar

#if defined(PSIVAL_HAVE_AVX2_KERNELS)
namespace avx2 {
void combine_keys(std::span<const std::uint32_t> major, std::uint32_t radix,
                  std::span<const std::uint32_t> minor, std::span<std::uint32_t> out);
std::uint32_t max_value(std::span<const std::uint32_t> values);
}  // namespace avx2
#endif

#if defined(PSIVAL_HAVE_NEON_KERNELS)
namespace neon {
void combine_keys(std::span<const std::uint32_t> major, std::uint32_t radix,
                  std::span<const std::uint32_t> minor, std::span<std::uint32_t> out);
std::uint32_t max_value(std::span<const std::uint32_t> values);
}  // namespace neon
#endif

}  // namespace psival::kernels

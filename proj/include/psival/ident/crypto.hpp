#pragma once

// Pseudonymization of sample identifiers.
//
// Every party holding the same secret key maps a raw identifier to the same
// EncryptedId:
//
//   inner = HMAC-SHA256(key, raw_id)
//   id    = HMAC-SHA256(key, inner)      // the 32 raw octets of inner
//
// Raw identifiers are hashed as their UTF-8 bytes. Numeric identifiers must
// be rendered with canonical_id() first so that "7", "07" and "+7" cannot
// diverge between parties.

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace psival::ident {

inline constexpr std::size_t kDigestSize = 32;
inline constexpr std::size_t kMinKeySize = 16;

using Digest = std::array<std::uint8_t, kDigestSize>;

Digest hmac_sha256(std::span<const std::uint8_t> key, std::span<const std::uint8_t> message);

/// Shared HMAC secret. Has no serialization or stream operator; the bytes are
/// wiped on destruction.
class SecretKey {
 public:
  explicit SecretKey(std::vector<std::uint8_t> bytes);
  ~SecretKey();

  SecretKey(const SecretKey&) = default;
  SecretKey& operator=(const SecretKey&) = default;
  SecretKey(SecretKey&&) noexcept = default;
  SecretKey& operator=(SecretKey&&) noexcept = default;

  /// At least 32 hex characters (16 octets), even length.
  static SecretKey from_hex(std::string_view hex);

  /// A file holding either hex text (surrounding whitespace ignored) or raw
  /// key bytes. Hex wins when the content parses as hex of sufficient length.
  static SecretKey from_file(const std::filesystem::path& path);

  /// Same rules as from_file, applied to the variable's value.
  static SecretKey from_env(const char* variable);

  std::span<const std::uint8_t> bytes() const noexcept { return bytes_; }

 private:
  std::vector<std::uint8_t> bytes_;
};

class EncryptedId {
 public:
  EncryptedId() = default;
  explicit EncryptedId(const Digest& digest) : digest_(digest) {}

  static std::optional<EncryptedId> parse_hex(std::string_view hex) noexcept;
  /// Throws InputError unless `hex` is exactly 64 lowercase hex characters.
  static EncryptedId from_hex(std::string_view hex);

  const Digest& digest() const noexcept { return digest_; }
  std::string hex() const;

  auto operator<=>(const EncryptedId&) const = default;

 private:
  Digest digest_{};
};

struct EncryptedIdHash {
  std::size_t operator()(const EncryptedId& id) const noexcept;
};

EncryptedId encrypt_id(const SecretKey& key, std::span<const std::uint8_t> raw_id);
EncryptedId encrypt_id(const SecretKey& key, std::string_view raw_id);

std::vector<EncryptedId> encrypt_column(const SecretKey& key, std::span<const std::string> raw_ids);

/// Minimal decimal rendering: no leading zeros, '-' only for negatives.
std::string canonical_id(std::int64_t id);

/// Text identifiers pass through unchanged; identifiers that are entirely an
/// optionally signed decimal integer within int64 are re-rendered with
/// canonical_id().
std::string canonicalize_id(std::string_view raw);

std::string to_hex(std::span<const std::uint8_t> bytes);
std::optional<std::vector<std::uint8_t>> from_hex(std::string_view hex);

}  // namespace psival::ident

template <>
struct std::hash<psival::ident::EncryptedId> : psival::ident::EncryptedIdHash {};

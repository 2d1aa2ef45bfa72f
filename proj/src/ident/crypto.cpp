#include "psival/ident/crypto.hpp"

#include <openssl/crypto.h>
#include <openssl/evp.h>
#include <openssl/hmac.h>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iterator>

#include "psival/errors.hpp"

namespace psival::ident {

namespace {

constexpr char kHexDigits[] = "0123456789abcdef";

int hex_value(char c) noexcept {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

std::string_view trim(std::string_view s) noexcept {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

SecretKey key_from_material(std::string_view material) {
  std::string_view text = trim(material);
  if (text.size() >= 2 * kMinKeySize) {
    if (auto decoded = from_hex(text)) return SecretKey(std::move(*decoded));
  }
  return SecretKey(std::vector<std::uint8_t>(material.begin(), material.end()));
}

}  // namespace

Digest hmac_sha256(std::span<const std::uint8_t> key, std::span<const std::uint8_t> message) {
  Digest out{};
  unsigned int len = 0;
  // HMAC() rejects a null key pointer even for zero length.
  static const std::uint8_t kEmpty = 0;
  const std::uint8_t* key_ptr = key.empty() ? &kEmpty : key.data();
  const std::uint8_t* msg_ptr = message.empty() ? &kEmpty : message.data();
  if (HMAC(EVP_sha256(), key_ptr, static_cast<int>(key.size()), msg_ptr, message.size(), out.data(),
           &len) == nullptr ||
      len != kDigestSize) {
    throw std::runtime_error("HMAC-SHA256 computation failed");
  }
  return out;
}

SecretKey::SecretKey(std::vector<std::uint8_t> bytes) : bytes_(std::move(bytes)) {
  if (bytes_.empty()) throw ConfigError("secret key is empty");
  if (bytes_.size() < kMinKeySize) {
    throw ConfigError("secret key must be at least " + std::to_string(kMinKeySize) + " octets, got " +
                      std::to_string(bytes_.size()));
  }
}

SecretKey::~SecretKey() {
  if (!bytes_.empty()) OPENSSL_cleanse(bytes_.data(), bytes_.size());
}

SecretKey SecretKey::from_hex(std::string_view hex) {
  auto decoded = ident::from_hex(trim(hex));
  if (!decoded) throw ConfigError("secret key is not valid hex");
  return SecretKey(std::move(*decoded));
}

SecretKey SecretKey::from_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read key file " + path.string());
  std::string material((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  SecretKey key = key_from_material(material);
  OPENSSL_cleanse(material.data(), material.size());
  return key;
}

SecretKey SecretKey::from_env(const char* variable) {
  const char* value = std::getenv(variable);
  if (value == nullptr || *value == '\0') {
    throw ConfigError(std::string("environment variable ") + variable + " is not set");
  }
  return key_from_material(value);
}

std::optional<EncryptedId> EncryptedId::parse_hex(std::string_view hex) noexcept {
  if (hex.size() != 2 * kDigestSize) return std::nullopt;
  Digest d{};
  for (std::size_t i = 0; i < kDigestSize; ++i) {
    const char hi = hex[2 * i];
    const char lo = hex[2 * i + 1];
    // Wire form is lowercase only.
    if (std::isupper(static_cast<unsigned char>(hi)) || std::isupper(static_cast<unsigned char>(lo))) {
      return std::nullopt;
    }
    const int h = hex_value(hi);
    const int l = hex_value(lo);
    if (h < 0 || l < 0) return std::nullopt;
    d[i] = static_cast<std::uint8_t>((h << 4) | l);
  }
  return EncryptedId(d);
}

EncryptedId EncryptedId::from_hex(std::string_view hex) {
  auto id = parse_hex(hex);
  if (!id) throw InputError("not a 64-character lowercase hex digest");
  return *id;
}

std::string EncryptedId::hex() const { return to_hex(digest_); }

std::size_t EncryptedIdHash::operator()(const EncryptedId& id) const noexcept {
  std::size_t h = 0;
  std::memcpy(&h, id.digest().data(), sizeof(h));
  return h;
}

EncryptedId encrypt_id(const SecretKey& key, std::span<const std::uint8_t> raw_id) {
  const Digest inner = hmac_sha256(key.bytes(), raw_id);
  return EncryptedId(hmac_sha256(key.bytes(), inner));
}

EncryptedId encrypt_id(const SecretKey& key, std::string_view raw_id) {
  return encrypt_id(key, std::span(reinterpret_cast<const std::uint8_t*>(raw_id.data()), raw_id.size()));
}

std::vector<EncryptedId> encrypt_column(const SecretKey& key, std::span<const std::string> raw_ids) {
  std::vector<EncryptedId> out;
  out.reserve(raw_ids.size());
  for (const auto& raw : raw_ids) out.push_back(encrypt_id(key, raw));
  return out;
}

std::string canonical_id(std::int64_t id) { return std::to_string(id); }

std::string canonicalize_id(std::string_view raw) {
  std::string_view digits = raw;
  if (!digits.empty() && (digits.front() == '+' || digits.front() == '-')) digits.remove_prefix(1);
  if (digits.empty() || !std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    return std::string(raw);
  }
  std::int64_t value = 0;
  const char* begin = raw.data() + (raw.front() == '+' ? 1 : 0);
  const auto [ptr, ec] = std::from_chars(begin, raw.data() + raw.size(), value);
  if (ec != std::errc() || ptr != raw.data() + raw.size()) return std::string(raw);
  return canonical_id(value);
}

std::string to_hex(std::span<const std::uint8_t> bytes) {
  std::string out;
  out.reserve(bytes.size() * 2);
  for (std::uint8_t b : bytes) {
    out.push_back(kHexDigits[b >> 4]);
    out.push_back(kHexDigits[b & 0x0f]);
  }
  return out;
}

std::optional<std::vector<std::uint8_t>> from_hex(std::string_view hex) {
  if (hex.size() % 2 != 0) return std::nullopt;
  std::vector<std::uint8_t> out(hex.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const int h = hex_value(hex[2 * i]);
    const int l = hex_value(hex[2 * i + 1]);
    if (h < 0 || l < 0) return std::nullopt;
    out[i] = static_cast<std::uint8_t>((h << 4) | l);
  }
  return out;
}

}  // namespace psival::ident

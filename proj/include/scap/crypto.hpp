#pragma once

#include <array>
#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <string_view>

#include "scap/common.hpp"
#include "scap/rng.hpp"

namespace scap {

inline constexpr std::size_t kKeyBytes = 16;
inline constexpr std::size_t kDigestBytes = 64;
inline constexpr std::size_t kPublicBytes = 32;
inline constexpr std::size_t kTagBytes = 16;

/// 128-bit symmetric key. Heartbeats, channel keys, device keys and session
/// keys all share this type; XOR of two keys is a key.
struct SymmetricKey {
  std::array<std::uint8_t, kKeyBytes> bytes{};

  friend SymmetricKey operator^(const SymmetricKey& a, const SymmetricKey& b) {
    SymmetricKey r;
    for (std::size_t i = 0; i < kKeyBytes; ++i) r.bytes[i] = a.bytes[i] ^ b.bytes[i];
    return r;
  }
  friend bool operator==(const SymmetricKey&, const SymmetricKey&) = default;
  friend auto operator<=>(const SymmetricKey&, const SymmetricKey&) = default;
};

/// Fixed 16-byte authenticator, used for attests and XOR aggregates.
using Tag16 = std::array<std::uint8_t, kTagBytes>;

inline Tag16 operator^(const Tag16& a, const Tag16& b) {
  Tag16 r;
  for (std::size_t i = 0; i < kTagBytes; ++i) r[i] = a[i] ^ b[i];
  return r;
}

struct Digest {
  std::array<std::uint8_t, kDigestBytes> bytes{};
  friend bool operator==(const Digest&, const Digest&) = default;
};

struct KeyPair {
  std::array<std::uint8_t, kPublicBytes> public_value{};
  std::array<std::uint8_t, kPublicBytes> secret_value{};
};

/// AEAD output. payload has the plaintext's length; auth_tag carries nonce and
/// authenticator and is not counted in protocol byte accounting.
struct Ciphertext {
  Bytes payload;
  Bytes auth_tag;
  friend bool operator==(const Ciphertext&, const Ciphertext&) = default;
};

/// Abstract cryptographic contract consumed by the protocol. Implementations
/// are stateless apart from an internal nonce counter.
class CryptoBackend {
 public:
  virtual ~CryptoBackend() = default;

  virtual std::string_view name() const = 0;
  virtual Ciphertext aenc(const SymmetricKey& key, ByteView plaintext) const = 0;
  virtual std::optional<Bytes> adec(const SymmetricKey& key, const Ciphertext& ct) const = 0;
  virtual KeyPair keypair_generate(Rng& rng) const = 0;
  virtual SymmetricKey key_exchange(const std::array<std::uint8_t, kPublicBytes>& own_secret,
                                    const std::array<std::uint8_t, kPublicBytes>& peer_public) const = 0;
  virtual Digest hash(ByteView input) const = 0;
  /// Keyed deterministic function truncated to 16 bytes.
  virtual Tag16 prf(const SymmetricKey& key, ByteView input) const = 0;
};

/// AES-128-GCM, SHA-512, X25519 and HMAC-SHA-512 via OpenSSL.
std::unique_ptr<CryptoBackend> make_openssl_backend(std::uint64_t nonce_salt);

/// Structural stand-in for very large runs: no confidentiality, but wrong keys
/// and modified payloads are still rejected, so protocol control flow is
/// identical to the real backend.
std::unique_ptr<CryptoBackend> make_null_backend(std::uint64_t nonce_salt);

/// Fresh heartbeat value.
SymmetricKey sample_heartbeat(Rng& rng);
SymmetricKey random_key(Rng& rng);

/// Simulated compute latencies of the reference microcontroller (seconds).
/// Sizes between measured points are interpolated linearly; sizes beyond the
/// largest point extrapolate along the last segment.
struct CostModel {
  double aead_16 = 0.1e-3;
  double aead_1024 = 1.8e-3;
  double hash_16 = 0.4e-3;
  double hash_1024 = 3.1e-3;
  double hash_30720 = 81.9e-3;
  double key_exchange = 48e-3;
  double keypair_generate = 18e-3;

  double aenc(std::size_t bytes) const { return aead(bytes); }
  double adec(std::size_t bytes) const { return aead(bytes); }
  double hash(std::size_t bytes) const;

 private:
  double aead(std::size_t bytes) const;
};

/// Accumulates simulated compute time charged by one handler invocation.
struct CostMeter {
  double seconds = 0.0;
  void charge(double s) { seconds += s; }
};

}  // namespace scap

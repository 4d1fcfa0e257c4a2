#include "scap/crypto.hpp"

#include <openssl/evp.h>
#include <openssl/hmac.h>

#include <cstring>

namespace scap {

std::string to_hex(ByteView bytes) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string s;
  s.reserve(bytes.size() * 2);
  for (auto b : bytes) {
    s.push_back(kDigits[b >> 4]);
    s.push_back(kDigits[b & 0xF]);
  }
  return s;
}

Bytes from_hex(const std::string& hex) {
  if (hex.size() % 2) throw DecodeError("odd-length hex string");
  auto nibble = [](char c) -> std::uint8_t {
    if (c >= '0' && c <= '9') return static_cast<std::uint8_t>(c - '0');
    if (c >= 'a' && c <= 'f') return static_cast<std::uint8_t>(c - 'a' + 10);
    if (c >= 'A' && c <= 'F') return static_cast<std::uint8_t>(c - 'A' + 10);
    throw DecodeError("invalid hex digit");
  };
  Bytes out(hex.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = static_cast<std::uint8_t>(nibble(hex[2 * i]) << 4 | nibble(hex[2 * i + 1]));
  return out;
}

SymmetricKey random_key(Rng& rng) {
  SymmetricKey k;
  rng.fill(k.bytes);
  return k;
}

SymmetricKey sample_heartbeat(Rng& rng) { return random_key(rng); }

double CostModel::aead(std::size_t bytes) const {
  const double slope = (aead_1024 - aead_16) / (1024.0 - 16.0);
  if (bytes <= 16) return aead_16;
  return aead_16 + slope * (static_cast<double>(bytes) - 16.0);
}

double CostModel::hash(std::size_t bytes) const {
  if (bytes <= 16) return hash_16;
  const double b = static_cast<double>(bytes);
  if (bytes <= 1024) return hash_16 + (hash_1024 - hash_16) * (b - 16.0) / (1024.0 - 16.0);
  return hash_1024 + (hash_30720 - hash_1024) * (b - 1024.0) / (30720.0 - 1024.0);
}

namespace {

class NonceSource {
 public:
  explicit NonceSource(std::uint64_t salt) : salt_(static_cast<std::uint32_t>(salt ^ (salt >> 32))) {}
  std::array<std::uint8_t, 12> next() const {
    const std::uint64_t c = counter_.fetch_add(1, std::memory_order_relaxed);
    std::array<std::uint8_t, 12> n{};
    for (int i = 0; i < 4; ++i) n[i] = static_cast<std::uint8_t>(salt_ >> (8 * i));
    for (int i = 0; i < 8; ++i) n[4 + i] = static_cast<std::uint8_t>(c >> (8 * i));
    return n;
  }

 private:
  std::uint32_t salt_;
  mutable std::atomic<std::uint64_t> counter_{0};
};

struct PkeyDeleter {
  void operator()(EVP_PKEY* p) const { EVP_PKEY_free(p); }
};
struct PkeyCtxDeleter {
  void operator()(EVP_PKEY_CTX* p) const { EVP_PKEY_CTX_free(p); }
};
struct CipherCtxDeleter {
  void operator()(EVP_CIPHER_CTX* p) const { EVP_CIPHER_CTX_free(p); }
};
using PkeyPtr = std::unique_ptr<EVP_PKEY, PkeyDeleter>;

class OpenSslBackend final : public CryptoBackend {
 public:
  explicit OpenSslBackend(std::uint64_t salt) : nonces_(salt) {}

  std::string_view name() const override { return "openssl"; }

  Ciphertext aenc(const SymmetricKey& key, ByteView plaintext) const override {
    const auto nonce = nonces_.next();
    std::unique_ptr<EVP_CIPHER_CTX, CipherCtxDeleter> ctx(EVP_CIPHER_CTX_new());
    Ciphertext ct;
    ct.payload.resize(plaintext.size());
    int len = 0;
    if (!ctx || EVP_EncryptInit_ex(ctx.get(), EVP_aes_128_gcm(), nullptr, key.bytes.data(), nonce.data()) != 1 ||
        EVP_EncryptUpdate(ctx.get(), ct.payload.data(), &len, plaintext.data(),
                          static_cast<int>(plaintext.size())) != 1 ||
        EVP_EncryptFinal_ex(ctx.get(), ct.payload.data() + len, &len) != 1)
      throw std::runtime_error("AES-GCM encryption failed");
    ct.auth_tag.assign(nonce.begin(), nonce.end());
    ct.auth_tag.resize(12 + kTagBytes);
    if (EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_GET_TAG, kTagBytes, ct.auth_tag.data() + 12) != 1)
      throw std::runtime_error("AES-GCM tag extraction failed");
    return ct;
  }

  std::optional<Bytes> adec(const SymmetricKey& key, const Ciphertext& ct) const override {
    if (ct.auth_tag.size() != 12 + kTagBytes) return std::nullopt;
    std::unique_ptr<EVP_CIPHER_CTX, CipherCtxDeleter> ctx(EVP_CIPHER_CTX_new());
    Bytes out(ct.payload.size());
    int len = 0;
    if (!ctx || EVP_DecryptInit_ex(ctx.get(), EVP_aes_128_gcm(), nullptr, key.bytes.data(), ct.auth_tag.data()) != 1)
      return std::nullopt;
    if (EVP_DecryptUpdate(ctx.get(), out.data(), &len, ct.payload.data(), static_cast<int>(ct.payload.size())) != 1)
      return std::nullopt;
    Bytes tag(ct.auth_tag.begin() + 12, ct.auth_tag.end());
    if (EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_TAG, kTagBytes, tag.data()) != 1) return std::nullopt;
    if (EVP_DecryptFinal_ex(ctx.get(), out.data() + len, &len) != 1) return std::nullopt;
    return out;
  }

  KeyPair keypair_generate(Rng& rng) const override {
    KeyPair kp;
    rng.fill(kp.secret_value);
    PkeyPtr pkey(EVP_PKEY_new_raw_private_key(EVP_PKEY_X25519, nullptr, kp.secret_value.data(), kPublicBytes));
    std::size_t len = kPublicBytes;
    if (!pkey || EVP_PKEY_get_raw_public_key(pkey.get(), kp.public_value.data(), &len) != 1)
      throw std::runtime_error("X25519 key generation failed");
    return kp;
  }

  SymmetricKey key_exchange(const std::array<std::uint8_t, kPublicBytes>& own_secret,
                            const std::array<std::uint8_t, kPublicBytes>& peer_public) const override {
    PkeyPtr own(EVP_PKEY_new_raw_private_key(EVP_PKEY_X25519, nullptr, own_secret.data(), kPublicBytes));
    PkeyPtr peer(EVP_PKEY_new_raw_public_key(EVP_PKEY_X25519, nullptr, peer_public.data(), kPublicBytes));
    if (!own || !peer) throw std::runtime_error("invalid X25519 key material");
    std::unique_ptr<EVP_PKEY_CTX, PkeyCtxDeleter> ctx(EVP_PKEY_CTX_new(own.get(), nullptr));
    std::array<std::uint8_t, 32> shared{};
    std::size_t len = shared.size();
    if (!ctx || EVP_PKEY_derive_init(ctx.get()) != 1 || EVP_PKEY_derive_set_peer(ctx.get(), peer.get()) != 1 ||
        EVP_PKEY_derive(ctx.get(), shared.data(), &len) != 1)
      throw std::runtime_error("X25519 derivation failed");
    const Digest d = hash(shared);
    SymmetricKey k;
    std::memcpy(k.bytes.data(), d.bytes.data(), kKeyBytes);
    return k;
  }

  Digest hash(ByteView input) const override {
    Digest d;
    unsigned int len = 0;
    if (EVP_Digest(input.data(), input.size(), d.bytes.data(), &len, EVP_sha512(), nullptr) != 1)
      throw std::runtime_error("SHA-512 failed");
    return d;
  }

  Tag16 prf(const SymmetricKey& key, ByteView input) const override {
    std::array<std::uint8_t, EVP_MAX_MD_SIZE> mac{};
    unsigned int len = 0;
    if (!HMAC(EVP_sha512(), key.bytes.data(), kKeyBytes, input.data(), input.size(), mac.data(), &len))
      throw std::runtime_error("HMAC-SHA-512 failed");
    Tag16 t;
    std::memcpy(t.data(), mac.data(), kTagBytes);
    return t;
  }

 private:
  NonceSource nonces_;
};

// splitmix64 finalizer
std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::uint64_t fast_hash(ByteView data, std::uint64_t seed) {
  std::uint64_t h = mix64(seed ^ data.size());
  std::size_t i = 0;
  for (; i + 8 <= data.size(); i += 8) {
    std::uint64_t w;
    std::memcpy(&w, data.data() + i, 8);
    h = mix64(h ^ w);
  }
  std::uint64_t tail = 0;
  for (int s = 0; i < data.size(); ++i, s += 8) tail |= std::uint64_t{data[i]} << s;
  return mix64(h ^ tail ^ 0xA5A5A5A5ull);
}

class NullBackend final : public CryptoBackend {
 public:
  explicit NullBackend(std::uint64_t salt) : nonces_(salt) {}

  std::string_view name() const override { return "null"; }

  Ciphertext aenc(const SymmetricKey& key, ByteView plaintext) const override {
    Ciphertext ct;
    ct.payload.assign(plaintext.begin(), plaintext.end());
    const std::uint64_t t = fast_hash(plaintext, fast_hash(key.bytes, 1));
    ct.auth_tag.resize(8);
    std::memcpy(ct.auth_tag.data(), &t, 8);
    return ct;
  }

  std::optional<Bytes> adec(const SymmetricKey& key, const Ciphertext& ct) const override {
    if (ct.auth_tag.size() != 8) return std::nullopt;
    const std::uint64_t t = fast_hash(ct.payload, fast_hash(key.bytes, 1));
    std::uint64_t got;
    std::memcpy(&got, ct.auth_tag.data(), 8);
    if (got != t) return std::nullopt;
    return ct.payload;
  }

  KeyPair keypair_generate(Rng& rng) const override {
    KeyPair kp;
    rng.fill(kp.secret_value);
    kp.public_value = kp.secret_value;
    return kp;
  }

  SymmetricKey key_exchange(const std::array<std::uint8_t, kPublicBytes>& own_secret,
                            const std::array<std::uint8_t, kPublicBytes>& peer_public) const override {
    // Public equals secret here, so ordering the pair makes the result symmetric.
    const auto& lo = own_secret < peer_public ? own_secret : peer_public;
    const auto& hi = own_secret < peer_public ? peer_public : own_secret;
    std::array<std::uint8_t, 2 * kPublicBytes> buf{};
    std::memcpy(buf.data(), lo.data(), kPublicBytes);
    std::memcpy(buf.data() + kPublicBytes, hi.data(), kPublicBytes);
    SymmetricKey k;
    const std::uint64_t a = fast_hash(buf, 7), b = fast_hash(buf, 8);
    std::memcpy(k.bytes.data(), &a, 8);
    std::memcpy(k.bytes.data() + 8, &b, 8);
    return k;
  }

  Digest hash(ByteView input) const override {
    Digest d;
    const std::uint64_t h = fast_hash(input, 3);
    for (std::size_t lane = 0; lane < 8; ++lane) {
      const std::uint64_t v = mix64(h + lane * 0xD1B54A32D192ED03ull);
      std::memcpy(d.bytes.data() + 8 * lane, &v, 8);
    }
    return d;
  }

  Tag16 prf(const SymmetricKey& key, ByteView input) const override {
    const std::uint64_t seed = fast_hash(key.bytes, 5);
    const std::uint64_t a = fast_hash(input, seed), b = fast_hash(input, seed ^ 0x55);
    Tag16 t;
    std::memcpy(t.data(), &a, 8);
    std::memcpy(t.data() + 8, &b, 8);
    return t;
  }

 private:
  NonceSource nonces_;
};

}  // namespace

std::unique_ptr<CryptoBackend> make_openssl_backend(std::uint64_t nonce_salt) {
  return std::make_unique<OpenSslBackend>(nonce_salt);
}

std::unique_ptr<CryptoBackend> make_null_backend(std::uint64_t nonce_salt) {
  return std::make_unique<NullBackend>(nonce_salt);
}

}  // namespace scap

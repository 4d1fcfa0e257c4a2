#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <set>

#include "scap/crypto.hpp"

using namespace scap;

namespace {

SymmetricKey key_from(std::uint8_t base) {
  SymmetricKey k;
  for (std::size_t i = 0; i < kKeyBytes; ++i) k.bytes[i] = static_cast<std::uint8_t>(base + i);
  return k;
}

template <std::size_t N>
std::array<std::uint8_t, N> arr(const std::string& hex) {
  const Bytes b = from_hex(hex);
  std::array<std::uint8_t, N> a{};
  std::memcpy(a.data(), b.data(), N);
  return a;
}

void backend_contract(const CryptoBackend& c) {
  Rng rng(42);
  const SymmetricKey k = random_key(rng), k2 = random_key(rng);
  const Bytes m{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16, 17};

  const Ciphertext ct = c.aenc(k, m);
  CHECK(ct.payload.size() == m.size());
  REQUIRE(c.adec(k, ct).has_value());
  CHECK(*c.adec(k, ct) == m);
  CHECK_FALSE(c.adec(k2, ct).has_value());

  // Session-key round trip.
  const Ciphertext cs = c.aenc(k ^ k2, m);
  CHECK(*c.adec(k ^ k2, cs) == m);
  CHECK_FALSE(c.adec(k, cs).has_value());

  // Every single-bit flip of payload and tag is rejected.
  for (std::size_t bit = 0; bit < ct.payload.size() * 8; ++bit) {
    Ciphertext t = ct;
    t.payload[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
    CHECK_FALSE(c.adec(k, t).has_value());
  }
  for (std::size_t bit = 0; bit < ct.auth_tag.size() * 8; ++bit) {
    Ciphertext t = ct;
    t.auth_tag[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
    CHECK_FALSE(c.adec(k, t).has_value());
  }

  const Bytes empty;
  CHECK(c.adec(k, c.aenc(k, empty))->empty());

  for (int i = 0; i < 8; ++i) {
    const KeyPair a = c.keypair_generate(rng), b = c.keypair_generate(rng);
    CHECK(c.key_exchange(a.secret_value, b.public_value) == c.key_exchange(b.secret_value, a.public_value));
    const KeyPair e = c.keypair_generate(rng);
    CHECK_FALSE(c.key_exchange(a.secret_value, b.public_value) == c.key_exchange(a.secret_value, e.public_value));
  }

  CHECK(c.hash(m) == c.hash(m));
  CHECK_FALSE(c.hash(m) == c.hash(Bytes{1}));
  CHECK(c.prf(k, m) == c.prf(k, m));
  CHECK(c.prf(k, m) != c.prf(k2, m));
}

}  // namespace

TEST_CASE("openssl backend contract") { backend_contract(*make_openssl_backend(1)); }

TEST_CASE("null backend contract") { backend_contract(*make_null_backend(1)); }

TEST_CASE("openssl backend matches reference vectors") {
  auto c = make_openssl_backend(7);
  const Bytes abc{'a', 'b', 'c'};
  CHECK(to_hex(c->hash(abc).bytes) ==
        "ddaf35a193617abacc417349ae20413112e6fa4e89a97ea20a9eeee64b55d39a2192992a274fc1a836ba3c23a3feebbd454d44"
        "23643ce80e2a9ac94fa54ca49f");

  SymmetricKey k;
  for (std::size_t i = 0; i < kKeyBytes; ++i) k.bytes[i] = static_cast<std::uint8_t>(i);
  const Bytes ts{0, 0, 0, 7};
  CHECK(to_hex(c->prf(k, ts)) == "fcf262ab3ce03d483eadce3e309d29e5");

  // X25519 test vector; the channel key is the first 16 bytes of SHA-512 of the shared secret.
  const auto alice_sk = arr<32>("77076d0a7318a57d3c16c17251b26645df4c2f87ebc0992ab177fba51db92c2a");
  const auto bob_pk = arr<32>("de9edb7d7b7dc1b4d35b61c2ece435373f8343c85b78674dadfc7e146f882b4f");
  CHECK(to_hex(c->key_exchange(alice_sk, bob_pk).bytes) == "3efdfd26b71935c26e478db0de1188df");
}

TEST_CASE("openssl keypair derives the public value") {
  auto c = make_openssl_backend(7);
  Rng rng(3);
  const KeyPair kp = c->keypair_generate(rng);
  CHECK(kp.public_value != kp.secret_value);
}

TEST_CASE("encryption of equal plaintexts is randomized") {
  auto c = make_openssl_backend(9);
  const SymmetricKey k = key_from(1);
  const Bytes m(16, 0);
  CHECK_FALSE(c->aenc(k, m) == c->aenc(k, m));
}

TEST_CASE("cost model reproduces measured latencies") {
  CostModel cm;
  CHECK(cm.aenc(16) == doctest::Approx(0.1e-3));
  CHECK(cm.adec(1024) == doctest::Approx(1.8e-3));
  CHECK(cm.hash(16) == doctest::Approx(0.4e-3));
  CHECK(cm.hash(1024) == doctest::Approx(3.1e-3));
  CHECK(cm.hash(30720) == doctest::Approx(81.9e-3));
  CHECK(cm.key_exchange == doctest::Approx(48e-3));
  CHECK(cm.keypair_generate == doctest::Approx(18e-3));
  CHECK(cm.aenc(520) == doctest::Approx(0.95e-3));
  CHECK(cm.aenc(4) == doctest::Approx(0.1e-3));
  CHECK(cm.aenc(2032) > cm.aenc(1024));
}

TEST_CASE("heartbeat sampling") {
  Rng a(1), b(1), c(2);
  CHECK(sample_heartbeat(a) == sample_heartbeat(b));
  CHECK_FALSE(sample_heartbeat(a) == sample_heartbeat(c));

  // Byte-level chi-square over 1e5 draws, 255 dof. 310.457 is the 0.99 quantile.
  Rng r(12345);
  std::array<double, 256> counts{};
  std::set<SymmetricKey> seen;
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) {
    const SymmetricKey hb = sample_heartbeat(r);
    CHECK(seen.insert(hb).second);
    for (auto v : hb.bytes) counts[v] += 1;
  }
  const double expected = draws * 16.0 / 256.0;
  double chi2 = 0;
  for (double o : counts) chi2 += (o - expected) * (o - expected) / expected;
  CHECK(chi2 < 310.457);
}

TEST_CASE("hex helpers") {
  const Bytes b{0x00, 0xab, 0xff};
  CHECK(to_hex(b) == "00abff");
  CHECK(from_hex("00ABff") == b);
  CHECK_THROWS_AS(from_hex("abc"), DecodeError);
  CHECK_THROWS_AS(from_hex("zz"), DecodeError);
}

TEST_CASE("rng derived draws are reproducible") {
  Rng a(5), b(5);
  for (int i = 0; i < 100; ++i) {
    CHECK(a.below(7) == b.below(7));
    const double u = a.uniform01();
    CHECK(u == b.uniform01());
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
  // mt19937_64's 10000th output is fixed by the standard.
  std::mt19937_64 ref(5489u);
  ref.discard(9999);
  CHECK(ref() == 9981545732273789042ull);
}

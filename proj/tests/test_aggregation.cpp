#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "scap/aggregation.hpp"

using namespace scap;

namespace {

struct Fixture {
  std::unique_ptr<CryptoBackend> crypto = make_openssl_backend(11);
  std::vector<SymmetricKey> keys;
  explicit Fixture(std::uint32_t n, std::uint64_t seed = 77) {
    Rng rng(seed);
    for (std::uint32_t i = 0; i < n; ++i) keys.push_back(random_key(rng));
  }
  TreeReport leaf(DeviceId id, std::uint32_t ts, bool boolean_mode = false) const {
    return TreeReport::single(id, tree_attest(*crypto, keys[id - 1], ts), boolean_mode);
  }
};

TreeReport fold(const std::vector<TreeReport>& parts) {
  TreeReport acc;
  for (const auto& p : parts) acc = tree_merge(acc, p);
  return acc;
}

}  // namespace

TEST_CASE("tree attest is deterministic and key-bound") {
  Fixture f(2);
  CHECK(tree_attest(*f.crypto, f.keys[0], 5) == tree_attest(*f.crypto, f.keys[0], 5));
  CHECK(tree_attest(*f.crypto, f.keys[0], 5) != tree_attest(*f.crypto, f.keys[1], 5));
  CHECK(tree_attest(*f.crypto, f.keys[0], 5) != tree_attest(*f.crypto, f.keys[0], 6));
  const Attest a = make_attest(*f.crypto, 1, f.keys[0], 5, 1128);
  CHECK(a.bit < 1128);
  CHECK(a.tag == tree_attest(*f.crypto, f.keys[0], 5));
}

TEST_CASE("compress") {
  Digest d;
  CHECK(compress(d, 1) == 0);
  d.bytes[63] = 200;
  CHECK(compress(d, 1000) == 200);
  d.bytes[62] = 1;  // 256 + 200
  CHECK(compress(d, 300) == 156);
  CHECK_THROWS_AS(compress(d, 0), PreconditionError);

  // Uniform digests through compress, 1e6 draws into 1128 cells. 1240.379 is
  // the 0.99 chi-square quantile for 1127 dof.
  Rng rng(2024);
  std::vector<double> counts(1128, 0.0);
  const int draws = 1000000;
  for (int i = 0; i < draws; ++i) {
    Digest u;
    rng.fill(u.bytes);
    counts[compress(u, 1128)] += 1;
  }
  const double e = draws / 1128.0;
  double chi2 = 0;
  for (double o : counts) chi2 += (o - e) * (o - e) / e;
  CHECK(chi2 < 1240.379);
}

TEST_CASE("tree merge") {
  Fixture f(6);
  const auto r1 = f.leaf(1, 9), r2 = f.leaf(2, 9), r3 = f.leaf(3, 9);
  const auto r23 = tree_merge(r2, r3);
  const auto all = tree_merge(r1, r23);
  CHECK(all.ids == std::vector<DeviceId>{1, 2, 3});
  CHECK(all.aggregate == (r1.aggregate ^ r2.aggregate ^ r3.aggregate));
  CHECK(tree_merge(all, TreeReport{}) == all);
  CHECK_THROWS_AS(tree_merge(all, r2), PreconditionError);
  CHECK_THROWS_AS(tree_merge(r1, f.leaf(2, 9, true)), PreconditionError);
}

TEST_CASE("tree report fold is order independent over all 3-subsets") {
  Fixture f(6);
  const std::uint32_t ts = 31;
  for (DeviceId a = 1; a <= 6; ++a)
    for (DeviceId b = a + 1; b <= 6; ++b)
      for (DeviceId c = b + 1; c <= 6; ++c) {
        std::vector<TreeReport> parts{f.leaf(a, ts), f.leaf(b, ts), f.leaf(c, ts)};
        const Tag16 brute = tree_attest(*f.crypto, f.keys[a - 1], ts) ^ tree_attest(*f.crypto, f.keys[b - 1], ts) ^
                            tree_attest(*f.crypto, f.keys[c - 1], ts);
        std::vector<int> perm{0, 1, 2};
        do {
          const auto left = fold({parts[perm[0]], parts[perm[1]], parts[perm[2]]});
          const auto right = tree_merge(parts[perm[0]], tree_merge(parts[perm[1]], parts[perm[2]]));
          CHECK(left.aggregate == brute);
          CHECK(right == left);
          CHECK(left.ids == std::vector<DeviceId>{a, b, c});
        } while (std::next_permutation(perm.begin(), perm.end()));
      }
}

TEST_CASE("tree report serialization") {
  Fixture f(1000);
  const std::uint32_t n = 1000, ts = 4;

  // Boolean mode carries only the aggregate.
  const auto b = f.leaf(7, ts, true);
  CHECK(serialize(b, n).size() == 17);
  CHECK(deserialize_tree(serialize(b, n), n) == b);

  // 99 ids at 10 bits each stay in list form: 1 + 1 + 124 + 16.
  TreeReport list;
  for (DeviceId id = 1; id <= 99; ++id) list = tree_merge(list, f.leaf(id, ts));
  CHECK(serialized_size(list, n) == 142);
  CHECK(serialize(list, n).size() == 142);
  CHECK(serialize(list, n)[0] == 1);
  CHECK(deserialize_tree(serialize(list, n), n) == list);

  // 100 ids switch to the 125-byte vector: 1 + 125 + 16.
  list = tree_merge(list, f.leaf(1000, ts));
  CHECK(serialized_size(list, n) == 142);
  CHECK(serialize(list, n)[0] == 2);
  CHECK(deserialize_tree(serialize(list, n), n) == list);

  const TreeReport empty;
  CHECK(serialize(empty, n).size() == 18);
  CHECK(deserialize_tree(serialize(empty, n), n) == empty);

  CHECK(serialized_size(f.leaf(1, ts), n) == 1 + 1 + 2 + 16);

  CHECK_THROWS_AS(deserialize_tree(Bytes{}, n), DecodeError);
  CHECK_THROWS_AS(deserialize_tree(Bytes{9, 0}, n), DecodeError);
  Bytes truncated = serialize(list, n);
  truncated.pop_back();
  CHECK_THROWS_AS(deserialize_tree(truncated, n), DecodeError);
}

TEST_CASE("verify_tree") {
  const std::uint32_t n = 7, ts = 100;
  Fixture f(n);
  TreeReport full, full_bool;
  full_bool.boolean_mode = true;
  for (DeviceId id = 1; id <= n; ++id) {
    full = tree_merge(full, f.leaf(id, ts));
    full_bool = tree_merge(full_bool, f.leaf(id, ts, true));
  }
  CHECK(verify_tree(*f.crypto, full, ts, f.keys, n).bits.to_string() == "1111111");
  CHECK(verify_tree(*f.crypto, full_bool, ts, f.keys, n).all_healthy());
  CHECK_FALSE(verify_tree(*f.crypto, full, ts + 1, f.keys, n).accepted);

  // Missing a device: boolean mode rejects, informative marks only that device.
  TreeReport six, six_bool;
  six_bool.boolean_mode = true;
  for (DeviceId id = 1; id <= 6; ++id) {
    six = tree_merge(six, f.leaf(id, ts));
    six_bool = tree_merge(six_bool, f.leaf(id, ts, true));
  }
  CHECK(verify_tree(*f.crypto, six_bool, ts, f.keys, n).bits.none());
  CHECK(verify_tree(*f.crypto, six, ts, f.keys, n).bits.to_string() == "1111110");

  // Fewer than n/2 described devices is rejected.
  TreeReport three;
  for (DeviceId id = 1; id <= 3; ++id) three = tree_merge(three, f.leaf(id, ts));
  CHECK_FALSE(verify_tree(*f.crypto, three, ts, f.keys, n).accepted);

  // Any single bit flip in the aggregate rejects.
  for (std::size_t bit = 0; bit < 128; ++bit) {
    TreeReport t = full;
    t.aggregate[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
    CHECK(verify_tree(*f.crypto, t, ts, f.keys, n).bits.none());
  }

  // Claiming an extra device with the genuine aggregate of the others rejects.
  TreeReport claim = six;
  claim.ids.push_back(7);
  CHECK_FALSE(verify_tree(*f.crypto, claim, ts, f.keys, n).accepted);
}

TEST_CASE("verify_tree rejects random perturbations") {
  const std::uint32_t n = 16, ts = 55;
  Fixture f(n);
  auto null = make_null_backend(3);
  TreeReport full;
  for (DeviceId id = 1; id <= n; ++id)
    full = tree_merge(full, TreeReport::single(id, tree_attest(*null, f.keys[id - 1], ts), false));
  REQUIRE(verify_tree(*null, full, ts, f.keys, n).all_healthy());
  Rng rng(8);
  int accepted = 0;
  for (int trial = 0; trial < 100000; ++trial) {
    TreeReport t = full;
    switch (rng.below(3)) {
      case 0: {  // random aggregate bits
        Tag16 mask{};
        while (mask == Tag16{}) {
          const auto flips = 1 + rng.below(8);
          for (std::uint64_t k = 0; k < flips; ++k) {
            const auto bit = rng.below(128);
            mask[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
          }
        }
        t.aggregate = t.aggregate ^ mask;
        break;
      }
      case 1:  // drop a device without adjusting the aggregate
        t.ids.erase(t.ids.begin() + static_cast<std::ptrdiff_t>(rng.below(t.ids.size())));
        break;
      default:  // random aggregate
        rng.fill(t.aggregate);
        break;
    }
    if (verify_tree(*null, t, ts, f.keys, n).accepted) ++accepted;
  }
  CHECK(accepted == 0);
}

TEST_CASE("dynamic report sizes") {
  CHECK(raw_size(1000, 128) == 266);
  CHECK(raw_size(4000, 128) == 1016);
  CHECK(raw_size(10000, 128) == 2516);
  CHECK(raw_size(64, 8) == 17);
  DynamicReport r(1000, 128);
  CHECK(serialize_raw(r).size() == 266);
}

TEST_CASE("dynamic merge is an OR semilattice") {
  const std::uint32_t n = 64, s = 8;
  Rng rng(5);
  std::vector<DynamicReport> parts;
  for (int i = 0; i < 5; ++i) {
    DynamicReport r(n, s);
    for (int k = 0; k < 6; ++k) {
      r.devices.set(rng.below(n));
      r.attest_bits.set(rng.below(n + s));
    }
    parts.push_back(r);
  }
  CHECK(dynamic_merge(parts[0], parts[0]) == parts[0]);
  DynamicReport flat(n, s);
  for (const auto& p : parts) flat = dynamic_merge(flat, p);
  std::vector<int> perm{0, 1, 2, 3, 4};
  do {
    DynamicReport acc(n, s);
    for (int i : perm) acc = dynamic_merge(acc, parts[i]);
    CHECK(acc == flat);
  } while (std::next_permutation(perm.begin(), perm.end()));
  DynamicReport acc = flat;
  CHECK_FALSE(dynamic_merge_into(acc, parts[2]));
  CHECK_THROWS_AS(dynamic_merge(parts[0], DynamicReport(n, s + 1)), PreconditionError);
}

TEST_CASE("dynamic report raw and RLE round trip") {
  Rng rng(6);
  for (double density : {0.0, 0.01, 0.1, 0.5, 0.9, 1.0}) {
    DynamicReport r(1000, 128);
    for (std::size_t i = 0; i < r.n; ++i)
      if (rng.uniform01() < density) r.devices.set(i);
    for (std::size_t i = 0; i < r.n_s(); ++i)
      if (rng.uniform01() < density) r.attest_bits.set(i);
    CHECK(deserialize_raw(serialize_raw(r), r.n, r.s) == r);
    const Bytes enc = rle_encode(r);
    CHECK(enc.size() <= raw_size(r.n, r.s) + 2);
    CHECK(rle_decode_report(enc, r.n, r.s) == r);
  }
}

TEST_CASE("RLE format") {
  BitVector zero(1128);
  const Bytes z = rle_encode(zero);
  CHECK(z == Bytes{0, 0xE8, 0x08});  // flag, varint(1128)
  CHECK(z.size() <= 6);
  CHECK(rle_decode(z, 1128) == zero);

  BitVector v(100);
  v.set(0);
  v.set(1);
  v.set(7);
  CHECK(rle_encode(v) == Bytes{0, 0, 2, 5, 1, 92});
  CHECK(rle_decode(rle_encode(v), 100) == v);

  // Alternating bits are incompressible and fall back to raw.
  BitVector alt(64);
  for (std::size_t i = 0; i < 64; i += 2) alt.set(i);
  const Bytes a = rle_encode(alt);
  CHECK(a[0] == 1);
  CHECK(a.size() == 9);
  CHECK(rle_decode(a, 64) == alt);

  CHECK_THROWS_AS(rle_decode(Bytes{}, 8), DecodeError);
  CHECK_THROWS_AS(rle_decode(Bytes{0, 9}, 8), DecodeError);
  CHECK_THROWS_AS(rle_decode(Bytes{0, 3}, 8), DecodeError);
  CHECK_THROWS_AS(rle_decode(Bytes{1, 0}, 64), DecodeError);
  CHECK_THROWS_AS(rle_decode(Bytes{7}, 8), DecodeError);
}

TEST_CASE("verify_dynamic") {
  const std::uint32_t n = 64, s = 8, ts = 12;
  Fixture f(n);
  DynamicReport full(n, s);
  for (DeviceId id = 1; id <= n; ++id)
    dynamic_merge_into(full, DynamicReport::single(n, s, id, dynamic_attest(*f.crypto, f.keys[id - 1], ts, n + s)));
  CHECK(verify_dynamic(*f.crypto, full, ts, f.keys, n, s).all_healthy());
  CHECK_FALSE(verify_dynamic(*f.crypto, full, ts + 1, f.keys, n, s).accepted);
  CHECK_FALSE(verify_dynamic(*f.crypto, full, ts, f.keys, n, s + 1).accepted);

  DynamicReport half(n, s);
  for (DeviceId id = 1; id <= n / 2; ++id)
    dynamic_merge_into(half, DynamicReport::single(n, s, id, dynamic_attest(*f.crypto, f.keys[id - 1], ts, n + s)));
  const Verdict v = verify_dynamic(*f.crypto, half, ts, f.keys, n, s);
  CHECK(v.accepted);
  CHECK(v.bits.popcount() == n / 2);

  DynamicReport extra = half;
  extra.attest_bits.set((half.attest_bits.to_string().find('0')));
  CHECK_FALSE(verify_dynamic(*f.crypto, extra, ts, f.keys, n, s).accepted);

  DynamicReport minority(n, s);
  minority.devices.set(0);
  minority.attest_bits.set(dynamic_attest(*f.crypto, f.keys[0], ts, n + s));
  CHECK(verify_dynamic(*f.crypto, minority, ts, f.keys, n, s).bits.none());
}

TEST_CASE("dynamic collision guess succeeds with frequency near |S|/n_s") {
  // Adversary holds the attests of devices 1..c and claims one more device
  // without adding attest bits; it wins iff that device's true bit collides.
  const std::uint32_t n = 64, s = 8, c = 24;
  Fixture f(n);
  auto null = make_null_backend(1);
  int wins = 0;
  double expected = 0;
  const int trials = 20000;
  for (int trial = 0; trial < trials; ++trial) {
    const auto ts = static_cast<std::uint32_t>(trial + 1);
    BitVector known(n + s);
    for (std::uint32_t k = 0; k < c; ++k) known.set(dynamic_attest(*null, f.keys[k], ts, n + s));
    expected += static_cast<double>(known.popcount()) / (n + s);
    if (known.test(dynamic_attest(*null, f.keys[c], ts, n + s))) ++wins;
  }
  const double rate = static_cast<double>(wins) / trials;
  expected /= trials;
  CHECK(rate <= static_cast<double>(c) / (n + s) + 0.01);
  CHECK(rate == doctest::Approx(expected).epsilon(0.05));
}

#include "scap/aggregation.hpp"

#include <algorithm>

namespace scap {

namespace {

Bytes ts_bytes(std::uint32_t ts) {
  Bytes b;
  put_be32(b, ts);
  return b;
}

unsigned id_width(std::uint32_t n) { return std::max(1u, ceil_log2(n)); }

bool use_list(std::size_t k, std::uint32_t n) { return static_cast<std::uint64_t>(k) * ceil_log2(n) < n; }

}  // namespace

Tag16 tree_attest(const CryptoBackend& crypto, const SymmetricKey& dk, std::uint32_t ts) {
  return crypto.prf(dk, ts_bytes(ts));
}

std::uint32_t compress(const Digest& digest, std::uint32_t n_s) {
  if (n_s == 0) throw PreconditionError("compress: n_s must be positive");
  std::uint64_t r = 0;
  for (auto b : digest.bytes) r = (r * 256 + b) % n_s;
  return static_cast<std::uint32_t>(r);
}

std::uint32_t dynamic_attest(const CryptoBackend& crypto, const SymmetricKey& dk, std::uint32_t ts,
                             std::uint32_t n_s) {
  Bytes in(dk.bytes.begin(), dk.bytes.end());
  put_be32(in, ts);
  return compress(crypto.hash(in), n_s);
}

Attest make_attest(const CryptoBackend& crypto, DeviceId device, const SymmetricKey& dk, std::uint32_t ts,
                   std::uint32_t n_s) {
  Attest a;
  a.device = device;
  a.tag = tree_attest(crypto, dk, ts);
  if (n_s > 0) a.bit = dynamic_attest(crypto, dk, ts, n_s);
  return a;
}

// ---------------------------------------------------------------------------
// Tree reports

TreeReport TreeReport::single(DeviceId id, const Tag16& attest, bool boolean_mode) {
  TreeReport r;
  r.boolean_mode = boolean_mode;
  if (!boolean_mode) r.ids.push_back(id);
  r.aggregate = attest;
  return r;
}

TreeReport tree_merge(const TreeReport& a, const TreeReport& b) {
  if (a.boolean_mode != b.boolean_mode) throw PreconditionError("tree_merge: mixed report modes");
  TreeReport r;
  r.boolean_mode = a.boolean_mode;
  r.aggregate = a.aggregate ^ b.aggregate;
  r.ids.reserve(a.ids.size() + b.ids.size());
  auto i = a.ids.begin(), j = b.ids.begin();
  while (i != a.ids.end() && j != b.ids.end()) {
    if (*i == *j) throw PreconditionError("tree_merge: overlapping descriptions");
    r.ids.push_back(*i < *j ? *i++ : *j++);
  }
  r.ids.insert(r.ids.end(), i, a.ids.end());
  r.ids.insert(r.ids.end(), j, b.ids.end());
  return r;
}

std::size_t serialized_size(const TreeReport& r, std::uint32_t n) {
  std::size_t desc = 0;
  if (!r.boolean_mode) {
    const std::size_t k = r.ids.size();
    desc = use_list(k, n) ? varint_size(k) + (k * id_width(n) + 7) / 8 : (n + 7) / 8;
  }
  return 1 + desc + kTagBytes;
}

Bytes serialize(const TreeReport& r, std::uint32_t n) {
  Bytes out;
  out.reserve(serialized_size(r, n));
  if (r.boolean_mode) {
    out.push_back(0);
  } else if (use_list(r.ids.size(), n)) {
    out.push_back(1);
    put_varint(out, r.ids.size());
    const unsigned w = id_width(n);
    const std::size_t base = out.size();
    out.resize(base + (r.ids.size() * w + 7) / 8, 0);
    std::size_t bit = 0;
    for (DeviceId id : r.ids) {
      if (id < 1 || id > n) throw PreconditionError("serialize: device id out of range");
      const std::uint32_t v = id - 1;
      for (unsigned k = 0; k < w; ++k, ++bit)
        if ((v >> k) & 1u) out[base + bit / 8] |= static_cast<std::uint8_t>(1u << (bit % 8));
    }
  } else {
    out.push_back(2);
    const std::size_t base = out.size();
    out.resize(base + (n + 7) / 8, 0);
    for (DeviceId id : r.ids) {
      if (id < 1 || id > n) throw PreconditionError("serialize: device id out of range");
      out[base + (id - 1) / 8] |= static_cast<std::uint8_t>(1u << ((id - 1) % 8));
    }
  }
  out.insert(out.end(), r.aggregate.begin(), r.aggregate.end());
  return out;
}

TreeReport deserialize_tree(ByteView in, std::uint32_t n) {
  if (in.empty()) throw DecodeError("empty tree report");
  TreeReport r;
  std::size_t off = 1;
  switch (in[0]) {
    case 0:
      r.boolean_mode = true;
      break;
    case 1: {
      const std::uint64_t k = get_varint(in, off);
      const unsigned w = id_width(n);
      if (k > n) throw DecodeError("tree report list longer than n");
      const std::size_t bytes = (k * w + 7) / 8;
      if (off + bytes > in.size()) throw DecodeError("truncated id list");
      std::size_t bit = 0;
      r.ids.reserve(k);
      for (std::uint64_t i = 0; i < k; ++i) {
        std::uint32_t v = 0;
        for (unsigned b = 0; b < w; ++b, ++bit)
          if ((in[off + bit / 8] >> (bit % 8)) & 1u) v |= 1u << b;
        const DeviceId id = v + 1;
        if (id > n || (!r.ids.empty() && id <= r.ids.back())) throw DecodeError("invalid id list");
        r.ids.push_back(id);
      }
      off += bytes;
      break;
    }
    case 2: {
      const std::size_t bytes = (n + 7) / 8;
      if (off + bytes > in.size()) throw DecodeError("truncated presence vector");
      for (std::uint32_t i = 0; i < n; ++i)
        if ((in[off + i / 8] >> (i % 8)) & 1u) r.ids.push_back(i + 1);
      off += bytes;
      break;
    }
    default:
      throw DecodeError("unknown tree report flag");
  }
  if (in.size() != off + kTagBytes) throw DecodeError("tree report aggregate length");
  std::copy(in.begin() + static_cast<std::ptrdiff_t>(off), in.end(), r.aggregate.begin());
  return r;
}

// ---------------------------------------------------------------------------
// Dynamic reports

DynamicReport DynamicReport::single(std::uint32_t n, std::uint32_t s, DeviceId id, std::uint32_t bit) {
  DynamicReport r(n, s);
  r.devices.set(id - 1);
  r.attest_bits.set(bit);
  return r;
}

DynamicReport dynamic_merge(const DynamicReport& a, const DynamicReport& b) {
  DynamicReport r = a;
  dynamic_merge_into(r, b);
  return r;
}

bool dynamic_merge_into(DynamicReport& acc, const DynamicReport& b) {
  if (acc.n != b.n || acc.s != b.s) throw PreconditionError("dynamic_merge: dimension mismatch");
  if (acc.devices.contains(b.devices) && acc.attest_bits.contains(b.attest_bits)) return false;
  acc.devices |= b.devices;
  acc.attest_bits |= b.attest_bits;
  return true;
}

std::size_t raw_size(std::uint32_t n, std::uint32_t s) { return (2 * static_cast<std::size_t>(n) + s + 7) / 8; }

Bytes serialize_raw(const DynamicReport& r) {
  Bytes out(raw_size(r.n, r.s), 0);
  r.devices.pack_into(out, 0);
  r.attest_bits.pack_into(out, r.n);
  return out;
}

DynamicReport deserialize_raw(ByteView in, std::uint32_t n, std::uint32_t s) {
  if (in.size() != raw_size(n, s)) throw DecodeError("dynamic report size");
  DynamicReport r;
  r.n = n;
  r.s = s;
  r.devices = BitVector::unpack(in, 0, n);
  r.attest_bits = BitVector::unpack(in, n, n + s);
  return r;
}

Bytes rle_encode(const BitVector& v) {
  Bytes out{0};
  bool current = false;
  std::size_t run = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v.test(i) == current) {
      ++run;
      continue;
    }
    put_varint(out, run);
    current = !current;
    run = 1;
  }
  put_varint(out, run);
  const std::size_t raw = (v.size() + 7) / 8;
  if (out.size() <= raw + 1) return out;
  Bytes fallback{1};
  v.pack_into(fallback, 8);
  fallback.resize(1 + raw, 0);
  return fallback;
}

BitVector rle_decode(ByteView in, std::size_t bits) {
  if (in.empty()) throw DecodeError("empty RLE stream");
  if (in[0] == 1) {
    if (in.size() != 1 + (bits + 7) / 8) throw DecodeError("raw fallback length");
    return BitVector::unpack(in.subspan(1), 0, bits);
  }
  if (in[0] != 0) throw DecodeError("unknown RLE flag");
  BitVector v(bits);
  std::size_t off = 1, pos = 0;
  bool current = false;
  while (off < in.size()) {
    const std::uint64_t run = get_varint(in, off);
    if (run > bits - pos) throw DecodeError("RLE run overflows vector");
    if (current)
      for (std::uint64_t k = 0; k < run; ++k) v.set(pos + k);
    pos += run;
    current = !current;
  }
  if (pos != bits) throw DecodeError("RLE runs do not cover vector");
  return v;
}

Bytes rle_encode(const DynamicReport& r) {
  const std::size_t bits = 2 * static_cast<std::size_t>(r.n) + r.s;
  BitVector all(bits);
  for (std::size_t i = 0; i < r.n; ++i)
    if (r.devices.test(i)) all.set(i);
  for (std::size_t i = 0; i < r.n_s(); ++i)
    if (r.attest_bits.test(i)) all.set(r.n + i);
  return rle_encode(all);
}

DynamicReport rle_decode_report(ByteView in, std::uint32_t n, std::uint32_t s) {
  const BitVector all = rle_decode(in, 2 * static_cast<std::size_t>(n) + s);
  DynamicReport r(n, s);
  for (std::size_t i = 0; i < n; ++i)
    if (all.test(i)) r.devices.set(i);
  for (std::size_t i = 0; i < r.n_s(); ++i)
    if (all.test(n + i)) r.attest_bits.set(i);
  return r;
}

// ---------------------------------------------------------------------------
// Verification

Verdict verify_tree(const CryptoBackend& crypto, const TreeReport& report, std::uint32_t ts,
                    const std::vector<SymmetricKey>& device_keys, std::uint32_t n) {
  if (device_keys.size() < n) throw PreconditionError("verify_tree: missing device keys");
  Tag16 expected{};
  if (report.boolean_mode) {
    for (std::uint32_t k = 0; k < n; ++k) expected = expected ^ tree_attest(crypto, device_keys[k], ts);
    if (expected != report.aggregate) return Verdict::reject(n);
    Verdict v{BitVector(n), true};
    for (std::uint32_t k = 0; k < n; ++k) v.bits.set(k);
    return v;
  }
  if (2 * static_cast<std::uint64_t>(report.ids.size()) < n) return Verdict::reject(n);
  for (DeviceId id : report.ids) {
    if (id < 1 || id > n) return Verdict::reject(n);
    expected = expected ^ tree_attest(crypto, device_keys[id - 1], ts);
  }
  if (expected != report.aggregate) return Verdict::reject(n);
  Verdict v{BitVector(n), true};
  for (DeviceId id : report.ids) v.bits.set(id - 1);
  return v;
}

Verdict verify_dynamic(const CryptoBackend& crypto, const DynamicReport& report, std::uint32_t ts,
                       const std::vector<SymmetricKey>& device_keys, std::uint32_t n, std::uint32_t s) {
  if (report.n != n || report.s != s) return Verdict::reject(n);
  if (device_keys.size() < n) throw PreconditionError("verify_dynamic: missing device keys");
  if (2 * report.devices.popcount() < n) return Verdict::reject(n);
  BitVector expected(n + s);
  for (std::uint32_t k = 0; k < n; ++k)
    if (report.devices.test(k)) expected.set(dynamic_attest(crypto, device_keys[k], ts, n + s));
  if (!(expected == report.attest_bits)) return Verdict::reject(n);
  return Verdict{report.devices, true};
}

}  // namespace scap

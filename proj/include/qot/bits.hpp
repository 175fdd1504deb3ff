#pragma once

#include <cstdint>
#include <cstring>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace qot {

/// Base error type for the whole stack.
struct QotError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Precondition violations (length mismatches, bad parameters).
struct UsageError : QotError {
  using QotError::QotError;
};

/// A peer deviated from the protocol (bad message, out-of-range value).
struct ProtocolError : QotError {
  using QotError::QotError;
};

//===----------------------------------------------------------------------===//
// BitString: packed bit vector.
//
// Bit order is little-endian within bytes: bit i lives in byte i/8 at
// position i%8.  Wire form is a 4-byte little-endian bit-length prefix
// followed by the packed bytes.
//===----------------------------------------------------------------------===//

class BitString {
public:
  BitString() = default;
  explicit BitString(size_t nbits) : n_(nbits), w_(words_for(nbits), 0) {}

  static BitString zeros(size_t n) { return BitString(n); }
  static BitString ones(size_t n) {
    BitString b(n);
    for (auto& w : b.w_) w = ~0ull;
    b.mask_tail();
    return b;
  }
  /// Low `width` bits of v, bit 0 first.
  static BitString from_u64(uint64_t v, size_t width) {
    if (width > 64) throw UsageError("from_u64: width > 64");
    BitString b(width);
    if (width) b.w_[0] = (width == 64) ? v : (v & ((1ull << width) - 1));
    return b;
  }
  static BitString from_bools(const std::vector<bool>& v) {
    BitString b(v.size());
    for (size_t i = 0; i < v.size(); ++i) b.set(i, v[i]);
    return b;
  }
  static BitString from_bytes(std::span<const uint8_t> bytes, size_t nbits);
  static BitString from_hex(const std::string& hex, size_t nbits);

  size_t size() const { return n_; }
  bool empty() const { return n_ == 0; }

  bool get(size_t i) const {
    check_index(i);
    return (w_[i >> 6] >> (i & 63)) & 1;
  }
  void set(size_t i, bool v) {
    check_index(i);
    uint64_t m = 1ull << (i & 63);
    if (v) w_[i >> 6] |= m; else w_[i >> 6] &= ~m;
  }
  void flip(size_t i) {
    check_index(i);
    w_[i >> 6] ^= 1ull << (i & 63);
  }

  void append(bool v) {
    if ((n_ & 63) == 0) w_.push_back(0);
    if (v) w_[n_ >> 6] |= 1ull << (n_ & 63);
    ++n_;
  }
  void append(const BitString& other) {
    for (size_t i = 0; i < other.n_; ++i) append(other.get(i));
  }

  BitString substr(size_t pos, size_t len) const {
    if (pos + len > n_) throw UsageError("substr out of range");
    BitString out(len);
    for (size_t i = 0; i < len; ++i) out.set(i, get(pos + i));
    return out;
  }

  /// Low `width` (<=64) bits starting at bit `pos`.
  uint64_t word_at(size_t pos, unsigned width) const {
    uint64_t v = 0;
    for (unsigned i = 0; i < width; ++i) v |= uint64_t(get(pos + i)) << i;
    return v;
  }

  BitString& operator^=(const BitString& o) {
    if (o.n_ != n_) throw UsageError("xor length mismatch");
    for (size_t i = 0; i < w_.size(); ++i) w_[i] ^= o.w_[i];
    return *this;
  }
  friend BitString operator^(BitString a, const BitString& b) { return a ^= b; }

  BitString operator~() const {
    BitString b(*this);
    for (auto& w : b.w_) w = ~w;
    b.mask_tail();
    return b;
  }

  bool operator==(const BitString& o) const { return n_ == o.n_ && w_ == o.w_; }
  bool operator!=(const BitString& o) const { return !(*this == o); }

  size_t popcount() const {
    size_t c = 0;
    for (auto w : w_) c += size_t(__builtin_popcountll(w));
    return c;
  }

  std::vector<uint8_t> bytes() const;
  std::string hex() const;

  /// 4-byte LE bit-length prefix + packed bytes.
  void serialize(std::vector<uint8_t>& out) const;
  static BitString deserialize(std::span<const uint8_t> in, size_t& off);

  std::span<const uint64_t> words() const { return w_; }
  std::span<uint64_t> words_mut() { return w_; }

  /// Zero the unused bits of the last word; call after writing via words_mut.
  void mask_tail() {
    if (n_ & 63) w_.back() &= (1ull << (n_ & 63)) - 1;
  }

private:
  static size_t words_for(size_t n) { return (n + 63) / 64; }
  void check_index(size_t i) const {
    if (i >= n_) throw UsageError("bit index out of range");
  }

  size_t n_ = 0;
  std::vector<uint64_t> w_;
};

//===----------------------------------------------------------------------===//
// Byte-level writer/reader for frame payloads (all integers little-endian).
//===----------------------------------------------------------------------===//

struct ByteWriter {
  std::vector<uint8_t> buf;

  void u8(uint8_t v) { buf.push_back(v); }
  void u32(uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(uint8_t(v >> (8 * i)));
  }
  void u64(uint64_t v) {
    for (int i = 0; i < 8; ++i) buf.push_back(uint8_t(v >> (8 * i)));
  }
  void bytes(std::span<const uint8_t> b) { buf.insert(buf.end(), b.begin(), b.end()); }
  void bits(const BitString& b) { b.serialize(buf); }
  std::vector<uint8_t> take() { return std::move(buf); }
};

struct ByteReader {
  std::span<const uint8_t> buf;
  size_t off = 0;

  explicit ByteReader(std::span<const uint8_t> b) : buf(b) {}

  void need(size_t n) const {
    if (off + n > buf.size()) throw QotError("payload truncated");
  }
  uint8_t u8() { need(1); return buf[off++]; }
  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= uint32_t(buf[off + i]) << (8 * i);
    off += 4;
    return v;
  }
  uint64_t u64() {
    need(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= uint64_t(buf[off + i]) << (8 * i);
    off += 8;
    return v;
  }
  BitString bits() { return BitString::deserialize(buf, off); }
  bool done() const { return off == buf.size(); }
  void finish() const {
    if (!done()) throw QotError("trailing bytes in payload");
  }
};

//===----------------------------------------------------------------------===//
// Rng: seeded splitmix64 stream with hierarchical derivation.
//===----------------------------------------------------------------------===//

inline uint64_t mix64(uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

class Rng {
public:
  explicit Rng(uint64_t seed) : s_(seed) {}

  uint64_t u64() { return mix64(s_ += 0x9E3779B97F4A7C15ull); }

  bool coin() {
    if (nbuf_ == 0) { buf_ = u64(); nbuf_ = 64; }
    bool b = buf_ & 1;
    buf_ >>= 1;
    --nbuf_;
    return b;
  }

  /// Uniform in [0, n) by rejection.
  uint64_t below(uint64_t n) {
    if (n == 0) throw UsageError("below(0)");
    uint64_t lim = UINT64_MAX - UINT64_MAX % n;
    uint64_t v;
    do { v = u64(); } while (v >= lim);
    return v % n;
  }

  BitString bits(size_t n) {
    BitString b(n);
    auto w = b.words_mut();
    for (size_t i = 0; i < w.size(); ++i) w[i] = u64();
    if (n & 63) w[w.size() - 1] &= (1ull << (n & 63)) - 1;
    return b;
  }

  /// Independent child stream; does not advance this stream.
  Rng child(uint64_t tag) const { return Rng(mix64(s_ ^ mix64(tag + 0x517CC1B727220A95ull))); }
  Rng child(const std::string& name) const {
    uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : name) { h ^= c; h *= 0x100000001b3ull; }
    return child(h);
  }

private:
  uint64_t s_;
  uint64_t buf_ = 0;
  int nbuf_ = 0;
};

std::string to_hex(std::span<const uint8_t> bytes);
std::vector<uint8_t> from_hex(const std::string& s);

/// In-place transpose of a 64x64 bit matrix: row i, column j (bit j of m[i])
/// moves to row j, column i.
void transpose64(uint64_t m[64]);

} // namespace qot

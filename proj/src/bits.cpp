#include "qot/bits.hpp"

namespace qot {

BitString BitString::from_bytes(std::span<const uint8_t> bytes, size_t nbits) {
  if (bytes.size() < (nbits + 7) / 8) throw UsageError("from_bytes: too few bytes");
  BitString b(nbits);
  for (size_t i = 0; i < (nbits + 7) / 8; ++i) {
    uint64_t byte = bytes[i];
    b.w_[i >> 3] |= byte << (8 * (i & 7));
  }
  b.mask_tail();
  return b;
}

std::vector<uint8_t> BitString::bytes() const {
  std::vector<uint8_t> out((n_ + 7) / 8);
  for (size_t i = 0; i < out.size(); ++i)
    out[i] = uint8_t(w_[i >> 3] >> (8 * (i & 7)));
  return out;
}

std::string BitString::hex() const { return to_hex(bytes()); }

BitString BitString::from_hex(const std::string& hex, size_t nbits) {
  return from_bytes(qot::from_hex(hex), nbits);
}

void BitString::serialize(std::vector<uint8_t>& out) const {
  for (int i = 0; i < 4; ++i) out.push_back(uint8_t(uint32_t(n_) >> (8 * i)));
  auto b = bytes();
  out.insert(out.end(), b.begin(), b.end());
}

BitString BitString::deserialize(std::span<const uint8_t> in, size_t& off) {
  if (off + 4 > in.size()) throw QotError("bitstring header truncated");
  uint32_t n = 0;
  for (int i = 0; i < 4; ++i) n |= uint32_t(in[off + i]) << (8 * i);
  off += 4;
  size_t nbytes = (size_t(n) + 7) / 8;
  if (off + nbytes > in.size()) throw QotError("bitstring body truncated");
  BitString b = from_bytes(in.subspan(off, nbytes), n);
  off += nbytes;
  return b;
}

std::string to_hex(std::span<const uint8_t> bytes) {
  static const char* digits = "0123456789abcdef";
  std::string s;
  s.reserve(bytes.size() * 2);
  for (uint8_t b : bytes) {
    s.push_back(digits[b >> 4]);
    s.push_back(digits[b & 15]);
  }
  return s;
}

std::vector<uint8_t> from_hex(const std::string& s) {
  auto nib = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
  };
  if (s.size() % 2) throw UsageError("hex string has odd length");
  std::vector<uint8_t> out(s.size() / 2);
  for (size_t i = 0; i < out.size(); ++i) {
    int hi = nib(s[2 * i]), lo = nib(s[2 * i + 1]);
    if (hi < 0 || lo < 0) throw UsageError("bad hex digit");
    out[i] = uint8_t(hi << 4 | lo);
  }
  return out;
}

void transpose64(uint64_t m[64]) {
  uint64_t mask = 0x00000000ffffffffull;
  for (int j = 32; j; j >>= 1, mask ^= mask << j) {
    for (int k = 0; k < 64; k = (k + j + 1) & ~j) {
      uint64_t t = ((m[k] >> j) ^ m[k + j]) & mask;
      m[k] ^= t << j;
      m[k + j] ^= t;
    }
  }
}

} // namespace qot

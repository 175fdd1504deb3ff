#include "qot/primitives.hpp"

#include <algorithm>
#include <bit>
#include <openssl/evp.h>
#include <openssl/sha.h>

namespace qot {

//===----------------------------------------------------------------------===//
// FastXof
//===----------------------------------------------------------------------===//

FastXof::FastXof(const BitString& seed) {
  uint64_t k = 0x6a09e667f3bcc908ull;
  for (uint64_t w : seed.words()) k = mix64(k ^ w);
  k_ = mix64(k ^ (uint64_t(seed.size()) * 0x9e3779b97f4a7c15ull));
}

BitString FastXof::bits(size_t n) {
  BitString out = BitString::zeros(n);
  for (auto& word : out.words_mut()) word = next_u64();
  out.mask_tail();
  return out;
}

//===----------------------------------------------------------------------===//
// CfPrg
//===----------------------------------------------------------------------===//

namespace {

constexpr uint64_t kRc[CfPrg::kRounds] = {
    0x243f6a8885a308d3ull, 0x13198a2e03707344ull, 0xa4093822299f31d0ull,
    0x082efa98ec4e6c89ull, 0x452821e638d01377ull,
};
constexpr uint64_t kAlt = 0x5a5a5a5a5a5a5a5aull;

uint64_t rotl_w(uint64_t x, unsigned s, unsigned w, uint64_t mask) {
  s %= w;
  if (s == 0) return x & mask;
  return ((x << s) | (x >> (w - s))) & mask;
}

} // namespace

unsigned CfPrg::word_width(unsigned lambda) { return 3 * lambda / 2; }

void CfPrg::check_lambda(unsigned lambda) {
  if (lambda < 6 || lambda > 32 || (lambda % 2) != 0)
    throw UsageError("prg: lambda must be even and in [6, 32]");
}

BitString CfPrg::block(const BitString& seed, uint32_t ctr) {
  const unsigned lambda = unsigned(seed.size());
  check_lambda(lambda);
  const unsigned w = word_width(lambda);
  const uint64_t mask = (w == 64) ? ~0ull : ((1ull << w) - 1);
  const uint64_t lmask = (lambda == 64) ? ~0ull : ((1ull << lambda) - 1);
  const unsigned half = lambda / 2;

  const uint64_t c = ctr;
  const uint64_t clo = c & lmask;
  const uint64_t chi = (lambda >= 32 ? 0 : (c >> lambda)) & lmask;

  uint64_t a = seed.word_at(0, half) | (clo << half);
  uint64_t b = seed.word_at(half, half) | (((chi ^ kAlt) & lmask) << half);
  a &= mask;
  b &= mask;

  for (unsigned r = 0; r < kRounds; ++r) {
    uint64_t t = rotl_w(a, 1, w, mask) & rotl_w(a, 5, w, mask);
    uint64_t nb = (b ^ t ^ rotl_w(a, 2, w, mask) ^ kRc[r]) & mask;
    b = a;
    a = nb;
  }

  BitString out = BitString::zeros(2 * w);
  auto ws = out.words_mut();
  ws[0] = a | (b << w);
  if (2 * w > 64) ws[1] = b >> (64 - w);
  out.mask_tail();
  return out;
}

BitString CfPrg::expand(const BitString& seed, size_t out_bits) {
  BitString out;
  uint32_t ctr = 0;
  while (out.size() < out_bits) out.append(block(seed, ctr++));
  return out.substr(0, out_bits);
}

std::vector<CircuitBuilder::W> CfPrg::append_block(CircuitBuilder& bld,
                                                   std::span<const CircuitBuilder::W> seed,
                                                   uint32_t ctr) {
  using W = CircuitBuilder::W;
  const unsigned lambda = unsigned(seed.size());
  check_lambda(lambda);
  const unsigned w = word_width(lambda);
  const unsigned half = lambda / 2;
  const uint64_t c = ctr;

  std::vector<W> a(w), b(w);
  for (unsigned i = 0; i < half; ++i) {
    a[i] = seed[i];
    b[i] = seed[half + i];
  }
  for (unsigned i = 0; i < lambda; ++i) {
    bool clo = (i < 32) && ((c >> i) & 1);
    bool chi = (lambda >= 32) ? false : ((lambda + i < 32) && ((c >> (lambda + i)) & 1));
    a[half + i] = CircuitBuilder::konst(clo);
    b[half + i] = CircuitBuilder::konst(chi ^ bool((kAlt >> i) & 1));
  }

  for (unsigned r = 0; r < kRounds; ++r) {
    std::vector<W> nb(w);
    for (unsigned i = 0; i < w; ++i) {
      W r1 = a[(i + w - 1) % w];
      W r5 = a[(i + w - 5) % w];
      W r2 = a[(i + w - 2) % w];
      W t = bld.and_(r1, r5);
      W v = bld.xor_(bld.xor_(b[i], t), r2);
      if ((kRc[r] >> i) & 1) v = bld.not_(v);
      nb[i] = v;
    }
    b = a;
    a = std::move(nb);
  }

  std::vector<W> out;
  out.reserve(2 * w);
  out.insert(out.end(), a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

BooleanCircuit CfPrg::circuit(unsigned lambda, size_t out_bits) {
  check_lambda(lambda);
  CircuitBuilder bld(lambda);
  auto seed = bld.inputs(0, lambda);
  size_t produced = 0;
  uint32_t ctr = 0;
  while (produced < out_bits) {
    auto blk = CfPrg::append_block(bld, seed, ctr++);
    for (size_t i = 0; i < blk.size() && produced < out_bits; ++i, ++produced)
      bld.output(blk[i]);
  }
  return bld.take();
}

BitString prg_expand(const Prg& prg, const BitString& seed) {
  if (seed.size() != prg.seed_len) throw UsageError("prg: seed length mismatch");
  if (prg.variant == Prg::Variant::Fast) return FastXof(seed).bits(prg.out_len);
  return CfPrg::expand(seed, prg.out_len);
}

//===----------------------------------------------------------------------===//
// Bit and string commitments
//===----------------------------------------------------------------------===//

BitString naor_commit(const BitString& rho, bool m, const BitString& r) {
  if (rho.size() != 3 * r.size()) throw UsageError("commit: rho must be 3*lambda bits");
  BitString c = CfPrg::block(r, 0);
  if (m) c ^= rho;
  return c;
}

bool naor_verify(const BitString& rho, const BitString& c, bool m, const BitString& r) {
  return c == naor_commit(rho, m, r);
}

BitString naor_commit_str(const BitString& rho, const BitString& msg, const BitString& master) {
  if (rho.size() != 3 * master.size()) throw UsageError("commit: rho must be 3*lambda bits");
  BitString c;
  for (size_t j = 0; j < msg.size(); ++j) {
    BitString pad = CfPrg::block(master, uint32_t(j));
    if (msg.get(j)) pad ^= rho;
    c.append(pad);
  }
  return c;
}

bool naor_verify_str(const BitString& rho, const BitString& c, const BitString& msg,
                     const BitString& master) {
  if (c.size() != msg.size() * rho.size()) return false;
  return c == naor_commit_str(rho, msg, master);
}

CircuitBuilder::W append_str_commit_check(CircuitBuilder& bld, const BitString& rho,
                                          const BitString& c,
                                          std::span<const CircuitBuilder::W> msg,
                                          std::span<const CircuitBuilder::W> master) {
  using W = CircuitBuilder::W;
  const size_t cl = rho.size();
  if (c.size() != msg.size() * cl) throw UsageError("commit gadget: length mismatch");
  std::vector<W> eqs;
  eqs.reserve(msg.size() * cl);
  for (size_t j = 0; j < msg.size(); ++j) {
    auto pad = CfPrg::append_block(bld, master, uint32_t(j));
    for (size_t t = 0; t < cl; ++t) {
      W v = pad[t];
      if (rho.get(t)) v = bld.xor_(v, msg[j]);
      eqs.push_back(c.get(j * cl + t) ? v : bld.not_(v));
    }
  }
  return bld.and_reduce(eqs);
}

//===----------------------------------------------------------------------===//
// Toeplitz hash
//===----------------------------------------------------------------------===//

std::vector<uint8_t> UniversalHash::serialize() const {
  ByteWriter bw;
  bw.u32(n);
  bw.u32(l);
  bw.bits(seed);
  return bw.take();
}

UniversalHash UniversalHash::deserialize(std::span<const uint8_t> in) {
  ByteReader br(in);
  UniversalHash uh;
  uh.n = br.u32();
  uh.l = br.u32();
  uh.seed = br.bits();
  br.finish();
  if (uh.seed.size() != size_t(uh.n) + uh.l - 1) throw UsageError("hash: bad seed length");
  return uh;
}

UniversalHash uh_sample(uint32_t n, uint32_t l, Rng& rng) {
  if (n == 0 || l == 0) throw UsageError("hash: empty dimensions");
  UniversalHash uh;
  uh.n = n;
  uh.l = l;
  uh.seed = rng.bits(size_t(n) + l - 1);
  return uh;
}

BitString uh_apply(const UniversalHash& uh, const BitString& x) {
  if (x.size() != uh.n) throw UsageError("hash: input length mismatch");
  const size_t L = uh.seed.size();
  // rs[k] = seed[L-1-k]; row i of the matrix is then rs[l-1-i ..+n), so each
  // output bit is one windowed AND-parity.
  BitString rs = BitString::zeros(L);
  for (size_t k = 0; k < L; ++k) rs.set(k, uh.seed.get(L - 1 - k));

  BitString y = BitString::zeros(uh.l);
  for (uint32_t i = 0; i < uh.l; ++i) {
    const size_t off = uh.l - 1 - i;
    uint64_t acc = 0;
    for (size_t k = 0; k < x.words().size(); ++k) {
      unsigned width = unsigned(std::min<size_t>(64, uh.n - 64 * k));
      acc ^= rs.word_at(off + 64 * k, width) & x.words()[k];
    }
    y.set(i, std::popcount(acc) & 1);
  }
  return y;
}

//===----------------------------------------------------------------------===//
// Digest
//===----------------------------------------------------------------------===//

BitString sha256_128(std::span<const uint8_t> data) {
  uint8_t out[SHA256_DIGEST_LENGTH];
  SHA256(data.data(), data.size(), out);
  return BitString::from_bytes(std::span<const uint8_t>(out, 16), 128);
}

BitString sha256_128_bits(const BitString& data) {
  std::vector<uint8_t> ser;
  data.serialize(ser);
  return sha256_128(ser);
}

Sha256Stream::Sha256Stream() {
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1)
    throw QotError("sha256 init failed");
  ctx_ = ctx;
}

Sha256Stream::~Sha256Stream() {
  if (ctx_) EVP_MD_CTX_free(static_cast<EVP_MD_CTX*>(ctx_));
}

void Sha256Stream::absorb(std::span<const uint8_t> data) {
  if (EVP_DigestUpdate(static_cast<EVP_MD_CTX*>(ctx_), data.data(), data.size()) != 1)
    throw QotError("sha256 update failed");
}

BitString Sha256Stream::final128() {
  uint8_t out[SHA256_DIGEST_LENGTH];
  unsigned int len = 0;
  if (EVP_DigestFinal_ex(static_cast<EVP_MD_CTX*>(ctx_), out, &len) != 1 || len < 16)
    throw QotError("sha256 final failed");
  return BitString::from_bytes(std::span<const uint8_t>(out, 16), 128);
}

} // namespace qot

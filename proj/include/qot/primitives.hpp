#pragma once

#include "qot/bits.hpp"
#include "qot/circuit.hpp"

namespace qot {

//===----------------------------------------------------------------------===//
// Fast PRG: splitmix64 in counter mode over an absorbed key.  Used for
// randomness tapes and anywhere no circuit representation is needed.
//===----------------------------------------------------------------------===//

class FastXof {
public:
  explicit FastXof(uint64_t seed) : k_(mix64(seed ^ 0x6a09e667f3bcc908ull)) {}
  explicit FastXof(const BitString& seed);

  uint64_t next_u64() { return mix64(k_ + 0x9e3779b97f4a7c15ull * ++ctr_); }
  bool coin() {
    if (left_ == 0) { buf_ = next_u64(); left_ = 64; }
    bool b = buf_ & 1;
    buf_ >>= 1;
    --left_;
    return b;
  }
  BitString bits(size_t n);

private:
  uint64_t k_;
  uint64_t ctr_ = 0;
  uint64_t buf_ = 0;
  unsigned left_ = 0;
};

//===----------------------------------------------------------------------===//
// Circuit-friendly PRG.
//
// One block maps a lambda-bit seed and a 32-bit counter to 3*lambda output
// bits.  State is two words of W = 3*lambda/2 bits:
//
//   a0 = seed[0 .. lambda/2)        ++ ctr[0 .. lambda)
//   b0 = seed[lambda/2 .. lambda)   ++ (ctr[lambda .. 2*lambda) ^ 0x5a pattern)
//
// then 5 rounds of
//
//   t = rotl(a,1) & rotl(a,5)
//   b = b ^ t ^ rotl(a,2) ^ RC[r]
//   swap(a, b)
//
// and the output is a ++ b.  The counter occupies 2*lambda injected bits, so
// blocks are distinct for counters below 2^(2*lambda).  lambda must be even,
// 6 <= lambda <= 32.
//===----------------------------------------------------------------------===//

struct CfPrg {
  static constexpr unsigned kRounds = 5;

  static unsigned word_width(unsigned lambda);
  static void check_lambda(unsigned lambda);

  static BitString block(const BitString& seed, uint32_t ctr);
  static BitString expand(const BitString& seed, size_t out_bits);

  /// Same block function as a circuit gadget.  `seed` are witness wires; the
  /// counter is a compile-time constant (its bits fold).
  static std::vector<CircuitBuilder::W> append_block(CircuitBuilder& b,
                                                     std::span<const CircuitBuilder::W> seed,
                                                     uint32_t ctr);

  /// Standalone circuit: lambda inputs, out_bits outputs, counter mode.
  static BooleanCircuit circuit(unsigned lambda, size_t out_bits);
};

struct Prg {
  enum class Variant : uint8_t { Fast = 0, CircuitFriendly = 1 };
  Variant variant = Variant::Fast;
  uint32_t seed_len = 0;
  uint32_t out_len = 0;
};

BitString prg_expand(const Prg& prg, const BitString& seed);

//===----------------------------------------------------------------------===//
// Bit commitment with a public coin rho (3*lambda bits):
//
//   commit(m; r) = expand(r)[0 .. 3*lambda) ^ (m ? rho : 0),  r a lambda-bit seed.
//
// A string commitment to an l-bit message reuses one master seed: bit j is
// padded with block(master, j), so the whole commitment is l * 3*lambda bits
// and opening is (message, master).
//===----------------------------------------------------------------------===//

BitString naor_commit(const BitString& rho, bool m, const BitString& r);
bool naor_verify(const BitString& rho, const BitString& c, bool m, const BitString& r);

BitString naor_commit_str(const BitString& rho, const BitString& msg, const BitString& master);
bool naor_verify_str(const BitString& rho, const BitString& c, const BitString& msg,
                     const BitString& master);

/// Circuit gadget: 1 iff naor_commit_str(rho, msg, master) == c, for public
/// rho and c and witness wires msg/master.
CircuitBuilder::W append_str_commit_check(CircuitBuilder& b, const BitString& rho,
                                          const BitString& c,
                                          std::span<const CircuitBuilder::W> msg,
                                          std::span<const CircuitBuilder::W> master);

//===----------------------------------------------------------------------===//
// Toeplitz universal hash {0,1}^n -> {0,1}^l, seeded by n+l-1 bits.
// Row i of the matrix is seed[i], seed[i+1], ..., read against x reversed;
// concretely y_i = parity_j( seed[(n-1) + i - j] & x_j ).
//===----------------------------------------------------------------------===//

struct UniversalHash {
  uint32_t n = 0;
  uint32_t l = 0;
  BitString seed; // n + l - 1 bits

  std::vector<uint8_t> serialize() const;
  static UniversalHash deserialize(std::span<const uint8_t> in);
  bool operator==(const UniversalHash&) const = default;
};

UniversalHash uh_sample(uint32_t n, uint32_t l, Rng& rng);
BitString uh_apply(const UniversalHash& uh, const BitString& x);

//===----------------------------------------------------------------------===//
// SHA-256 truncated to 128 bits; view digests and transcript hashing.
//===----------------------------------------------------------------------===//

BitString sha256_128(std::span<const uint8_t> data);
BitString sha256_128_bits(const BitString& data);

/// Incremental variant for data too large to hold at once.
class Sha256Stream {
public:
  Sha256Stream();
  Sha256Stream(const Sha256Stream&) = delete;
  Sha256Stream& operator=(const Sha256Stream&) = delete;
  Sha256Stream(Sha256Stream&& o) noexcept : ctx_(o.ctx_) { o.ctx_ = nullptr; }
  ~Sha256Stream();

  void absorb(std::span<const uint8_t> data);
  /// First 128 bits of the digest; the stream is spent afterwards.
  BitString final128();

private:
  void* ctx_;
};

} // namespace qot

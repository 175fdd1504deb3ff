#pragma once

#include "qot/circuit.hpp"
#include "qot/primitives.hpp"

namespace qot {

/// A garbled evaluation went off the rails: a table row failed its
/// integrity check or an output label decoded to neither bit.
struct GarbleError : QotError {
  using QotError::QotError;
};

//===----------------------------------------------------------------------===//
// Yao garbling with point-and-permute, fully derandomized from one seed.
//
// Every wire w gets a label pair and a permutation bit from one PRG block:
// block(seed, w) = L0 (lambda bits) || D (lambda bits) || perm (1 bit),
// with L1 = L0 ^ (D | 1).  Forcing the low difference bit keeps the two
// labels of a wire distinct at any lambda, so output decoding is exact.
// A label travels together with its select bit (value XOR perm), so an
// encoded wire is lambda+1 bits.
//
// XOR and AND gates carry a four-row table indexed by the input select
// bits; NOT carries two rows; CONST stores its active label in the clear.
// Row (sa, sb) of gate gi is masked by two PRG blocks keyed by the XOR of
// the input labels:
//
//   row = plaintext ^ block(La ^ Lb, 8*gi + 2*r) || block(.., 8*gi + 2*r + 1)
//   plaintext = L_out || select_out || 0^{3*lambda}
//
// The 3*lambda-bit zero tag is the per-row integrity check: a wrong input
// label derails the mask and the tag survives with probability 2^-3lambda.
// Free-XOR is deliberately not used; every table row is recomputable by
// the same block gadget that the consistency statements use in zero
// knowledge.
//
// Counters bound the circuit: the PRG keeps blocks distinct only below
// 2^(2*lambda), so garb rejects circuits whose wire or row counters would
// wrap.
//===----------------------------------------------------------------------===//

/// Encoding information e: label pairs and permutation bits for the input
/// wires.
struct WireLabels {
  unsigned lambda = 0;
  std::vector<std::array<BitString, 2>> label;
  std::vector<uint8_t> perm;
};

struct GarbledCircuit {
  unsigned lambda = 0;
  BooleanCircuit topo;
  std::vector<std::vector<BitString>> table; // per gate: masked rows
  std::vector<std::array<BitString, 2>> decode; // per output: both labels

  /// The seed-determined region as one flat bit stream: every table row,
  /// then both decode labels per output.  This is what a consistency
  /// statement recomputes and compares.
  BitString payload_bits() const;

  std::vector<uint8_t> serialize() const;
  static GarbledCircuit deserialize(std::span<const uint8_t> in);

  bool operator==(const GarbledCircuit&) const = default;
};

/// Row counter base for gate gi, row r (two PRG blocks per row).
inline uint32_t garble_row_ctr(uint32_t gi, unsigned r) { return 8 * gi + 2 * r; }

/// Garbles c deterministically from a lambda-bit seed (lambda is
/// seed.size()).  Throws UsageError if the circuit exceeds the PRG counter
/// space at this lambda.
std::pair<GarbledCircuit, WireLabels> garb(const BooleanCircuit& c, const BitString& seed);

/// Encodes an input: the concatenation of (label || select) per input wire.
BitString enc(const WireLabels& e, const BitString& x);

/// Evaluates a garbled circuit on an encoded input.  Throws GarbleError if
/// any row integrity tag fails or an output label matches neither decode
/// entry.
BitString geval(const GarbledCircuit& g, const BitString& xhat);

/// Simulator: from the topology and an output value alone, produces a
/// garbled circuit and encoded input that evaluate to y, with the same
/// serialized shape as a real garbling.
std::pair<GarbledCircuit, BitString> garbsim(const BooleanCircuit& topo, const BitString& y,
                                             unsigned lambda, Rng& rng);

} // namespace qot

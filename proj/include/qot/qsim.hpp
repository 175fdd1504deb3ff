#pragma once

#include "qot/bits.hpp"

#include <functional>
#include <mutex>
#include <unordered_map>
#include <utility>

namespace qot {

/// A party tried to use a handle it does not own.
struct OwnershipError : QotError {
  using QotError::QotError;
};
/// A handle that was already measured or transmitted away.
struct DeadHandleError : QotError {
  using QotError::QotError;
};

enum class Basis : uint8_t { Plus = 0, Times = 1 };

inline Basis basis_from_bit(bool b) { return b ? Basis::Times : Basis::Plus; }
inline bool basis_bit(Basis b) { return b == Basis::Times; }

using PartyId = uint8_t;

struct QubitRef {
  uint64_t id = 0;
  bool operator==(const QubitRef&) const = default;
};

/// Honest measurement: same basis reproduces the prepared bit, conjugate
/// basis draws a fair coin.  An adversary hook may replace those
/// probabilities; fields default to the honest table.
struct MeasureBias {
  double p_same[2] = {0.0, 1.0}; // Pr[outcome=1 | same basis, prepared bit b]
  double p_conj = 0.5;           // Pr[outcome=1 | conjugate basis]
};

//===----------------------------------------------------------------------===//
// QubitBroker: the physics side of the protocol.
//
// Parties hold opaque handles; preparation data lives only in here.  Every
// handle is usable exactly once: measuring or transmitting kills it
// (transmission returns a fresh handle for the new owner).  All requests
// are serialized under one lock.
//===----------------------------------------------------------------------===//

class QubitBroker {
public:
  explicit QubitBroker(uint64_t seed) : rng_(seed) {}

  QubitRef prepare(PartyId caller, bool x, Basis theta);
  QubitRef transmit(PartyId caller, QubitRef q, PartyId to);
  bool measure(PartyId caller, QubitRef q, Basis theta_prime);
  std::pair<QubitRef, QubitRef> epr_pair(PartyId caller);

  /// Adversarial measurement with a caller-supplied outcome table.
  bool measure_biased(PartyId caller, QubitRef q, Basis theta_prime, const MeasureBias& bias);

  /// Test and simulator introspection; not reachable through any party-facing
  /// protocol message.
  struct PeekInfo {
    bool is_epr_half = false;
    bool x = false;     // prepared bit (prepared qubits only)
    Basis theta = Basis::Plus;
    uint64_t pair_id = 0;
    bool alive = false;
    PartyId owner = 0;
  };
  PeekInfo peek(QubitRef q) const;

  /// Replace the broker's coin draws with an explicit stream (exhaustion
  /// throws).  Pass an empty function to restore the seeded RNG.
  void set_coin_source(std::function<bool()> fn);

  size_t live_handles() const;

  /// The broker's own coin draws for one-off uses (simulators).
  bool fresh_coin() {
    std::lock_guard<std::mutex> lk(mu_);
    return coin_locked();
  }

private:
  struct Slot {
    PartyId owner = 0;
    bool alive = true;
    bool is_epr_half = false;
    bool x = false;
    Basis theta = Basis::Plus;
    uint64_t pair_id = 0;
  };
  struct PairState {
    bool collapsed = false;
    Basis basis = Basis::Plus;
    bool bit = false;
  };

  bool coin_locked();
  bool bernoulli_locked(double p);
  Slot& live_slot_locked(PartyId caller, QubitRef q);
  bool measure_locked(PartyId caller, QubitRef q, Basis theta_prime, const MeasureBias& bias);

  mutable std::mutex mu_;
  Rng rng_;
  std::function<bool()> coin_src_;
  uint64_t next_id_ = 1;
  uint64_t next_pair_ = 1;
  std::unordered_map<uint64_t, Slot> slots_;
  std::unordered_map<uint64_t, PairState> pairs_;
};

//===----------------------------------------------------------------------===//
// QuantumApi: what protocol code sees.  Binds a fixed party id, so code
// cannot impersonate a peer; backed either by a local broker or by a broker
// service across the network.
//===----------------------------------------------------------------------===//

class QuantumApi {
public:
  virtual ~QuantumApi() = default;
  virtual PartyId self() const = 0;
  virtual QubitRef prepare(bool x, Basis theta) = 0;
  virtual QubitRef transmit(QubitRef q, PartyId to) = 0;
  virtual bool measure(QubitRef q, Basis theta_prime) = 0;
  virtual std::pair<QubitRef, QubitRef> epr_pair() = 0;
  virtual bool measure_biased(QubitRef q, Basis theta_prime, const MeasureBias& bias) = 0;
};

class LocalQuantum : public QuantumApi {
public:
  LocalQuantum(QubitBroker& br, PartyId me) : br_(br), me_(me) {}

  PartyId self() const override { return me_; }
  QubitRef prepare(bool x, Basis theta) override { return br_.prepare(me_, x, theta); }
  QubitRef transmit(QubitRef q, PartyId to) override { return br_.transmit(me_, q, to); }
  bool measure(QubitRef q, Basis theta_prime) override { return br_.measure(me_, q, theta_prime); }
  std::pair<QubitRef, QubitRef> epr_pair() override { return br_.epr_pair(me_); }
  bool measure_biased(QubitRef q, Basis theta_prime, const MeasureBias& bias) override {
    return br_.measure_biased(me_, q, theta_prime, bias);
  }

  QubitBroker& broker() { return br_; }
  PartyId party() const { return me_; }

private:
  QubitBroker& br_;
  PartyId me_;
};

} // namespace qot

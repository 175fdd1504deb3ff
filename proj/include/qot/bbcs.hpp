#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "qot/bits.hpp"
#include "qot/primitives.hpp"
#include "qot/qsim.hpp"
#include "qot/socom.hpp"
#include "qot/transport.hpp"

namespace qot {

/// Quantum oblivious transfer in the selective-opening-commitment hybrid.
///
/// One instance runs in four phases over a single classical connection plus
/// the qubit broker:
///
///   preamble   S draws x, theta in {0,1}^n, prepares |x_i> in basis theta_i
///              and ships the handles in one QubitRef frame.  R measures each
///              qubit in its own random basis theta'_i, obtaining x'_i, and
///              commits the n records (theta'_i, x'_i) through the backend.
///   checking   S picks a uniform subset T of exactly t_check indices and has
///              the backend open it.  If any opened record has the same basis
///              as S but a different outcome, S aborts.  Both sides drop the
///              positions in T; the surviving bits are reindexed ascending.
///   partition  S reveals its surviving bases.  R splits the surviving
///              indices into I_c = (bases agree) and I_(1-c) = (bases differ)
///              and sends (I_0, I_1).  S aborts unless the two lists are a
///              partition of the surviving range.
///   transfer   S samples a fresh universal hash f : {0,1}^n -> {0,1}^l and
///              sends (f, m_0, m_1) with m_i = s_i xor f(pad(x|_{I_i})),
///              where pad keeps bits in increasing index order and appends
///              zeros up to n.  R outputs m_c xor f(pad(x'|_{I_c})).
///
/// The k-fold wrapper runs every phase across all instances at once, in
/// instance-major order: one QubitRef frame carries all k*n handles, the k*n
/// records form a single commitment session, all check subsets are opened in
/// one request, and one frame each carries the surviving bases, partitions
/// and transfer tuples.  A failed check in any instance aborts the whole run.
///
/// Commitment record layout: bit 0 = basis, bit 1 = measured outcome.
/// Partition lists carry indices into the reindexed surviving range.
/// An abort is announced with a Control frame before throwing, so the peer
/// fails promptly instead of blocking.
struct QotParams {
  uint32_t n = 16;       ///< qubits per instance
  double alpha = 0.375;  ///< checked fraction, strictly between 1/4 and 1/2
  uint32_t l = 4;        ///< secret length in bits
  unsigned lambda = 8;   ///< commitment security parameter
  size_t zk_rounds = 10; ///< rounds for the backend's consistency argument

  uint32_t t_check() const;
  void validate() const;
};

/// Commitment-session shape used by a k-instance run over these parameters.
SoComParams qot_socom_params(const QotParams& p, uint32_t instances);

/// Everything the sender knows after a completed instance.
struct QotSenderView {
  BitString x, theta;                  // preamble draw (n bits each)
  std::vector<uint32_t> checked;       // T, ascending original indices
  std::vector<uint32_t> i0, i1;        // partition over surviving indices
  UniversalHash f;
  BitString m0, m1;
};

/// Receiver counterpart; out is the transferred secret.
struct QotReceiverView {
  BitString out;
  BitString theta, x;                  // measurement bases and outcomes
  std::vector<uint32_t> i0, i1;
};

/// Step overrides for adversarial receivers.  Unset hooks keep the honest
/// behavior.  The instance index distinguishes runs inside a k-fold session.
struct QotReceiverHooks {
  /// Replaces the measurement loop: given this instance's qubit handles,
  /// produce (bases, outcomes) to commit, or nullopt to measure honestly.
  /// Handles may be left unmeasured.
  std::function<std::optional<std::pair<BitString, BitString>>(
      uint32_t inst, QuantumApi& q, const std::vector<QubitRef>& qubits, Rng& rng)>
      preamble;
  /// May rewrite the partition lists before they are sent.
  std::function<void(uint32_t inst, std::vector<uint32_t>& i0, std::vector<uint32_t>& i1)>
      partition;
};

/// One instance.  epr_preamble switches the sender to an EPR variant that
/// ships halves of fresh pairs and defers its own measurement until after the
/// commitment lands; the receiver cannot tell the difference.  Test use only.
QotSenderView qot_send(Conn& conn, QuantumApi& q, SoComOpenEnd& backend, const QotParams& p,
                       const BitString& s0, const BitString& s1, Rng& rng,
                       bool epr_preamble = false);
QotReceiverView qot_receive(Conn& conn, QuantumApi& q, SoComCommitEnd& backend,
                            const QotParams& p, bool choice, Rng& rng,
                            const QotReceiverHooks* hooks = nullptr);

/// k parallel instances with merged phases (see above).  choices holds one
/// bit per instance; secrets and the returned views are instance-indexed.
std::vector<QotSenderView> pot_send(Conn& conn, QuantumApi& q, SoComOpenEnd& backend,
                                    const QotParams& p, uint32_t instances,
                                    const std::vector<std::array<BitString, 2>>& secrets,
                                    Rng& rng, bool epr_preamble = false);
std::vector<QotReceiverView> pot_receive(Conn& conn, QuantumApi& q, SoComCommitEnd& backend,
                                         const QotParams& p, uint32_t instances,
                                         const BitString& choices, Rng& rng,
                                         const QotReceiverHooks* hooks = nullptr);

/// Ideal k-fold oblivious transfer.  The first sender query records the
/// secrets; repeats are ignored.  A receiver query before any record exists
/// is ignored (nullopt); afterwards it reveals one secret per instance.
class FPot {
public:
  FPot(uint32_t instances, uint32_t l);

  void sender_query(const std::vector<std::array<BitString, 2>>& secrets);
  std::optional<std::vector<BitString>> receiver_query(const BitString& choices);
  bool recorded() const { return recorded_; }

private:
  uint32_t instances_, l_;
  bool recorded_ = false;
  std::vector<std::array<BitString, 2>> secrets_;
};

/// Preamble building blocks, exposed so distribution tests can drive them
/// with explicit inputs.  count is the total number of qubits shipped.
struct SenderPreamble {
  BitString x, theta;          // empty until measured in the EPR variant
  std::vector<QubitRef> kept;  // retained EPR halves awaiting measurement
};
SenderPreamble qot_preamble_send(Conn& conn, QuantumApi& q, uint32_t count, Rng& rng,
                                 bool epr = false);
SenderPreamble qot_preamble_send_explicit(Conn& conn, QuantumApi& q, const BitString& x,
                                          const BitString& theta);
void qot_preamble_measure_delayed(SenderPreamble& pre, QuantumApi& q, Rng& rng);
void qot_preamble_measure_delayed_explicit(SenderPreamble& pre, QuantumApi& q,
                                           const BitString& theta);
std::pair<BitString, BitString> qot_preamble_receive(Conn& conn, QuantumApi& q, uint32_t count,
                                                     Rng& rng);

} // namespace qot

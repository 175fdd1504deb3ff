#pragma once

#include "qot/circuit.hpp"
#include "qot/primitives.hpp"
#include "qot/transport.hpp"

namespace qot {

//===----------------------------------------------------------------------===//
// Interactive zero-knowledge argument for boolean-circuit satisfiability.
//
// The statement is "there is a witness w such that every instance of the
// template circuit outputs 1".  A statement is stored as one shared template
// plus per-instance bindings (constant input bits and witness indices); a
// plain circuit is the one-instance special case.  Semantically this is the
// flat conjunction of all instances over a single witness string, but the
// blocked form keeps large statements streamable and lets provers share one
// compiled template across thousands of instances.
//
// The argument itself is a commit-and-open protocol: the prover additively
// shares the witness among three simulated parties, runs the circuit over
// the shares, and commits to each party's view (input share, random tape,
// AND-gate output shares).  The verifier picks one of the three adjacent
// pairs; the prover opens those two views, and the verifier recomputes the
// first opened party's AND outputs from the pair relation, so a round leaks
// nothing about the third share while any inconsistent pair survives a
// challenge with probability at most 2/3.  Rounds run sequentially; overall
// soundness error is (2/3)^rounds.
//===----------------------------------------------------------------------===//

struct ZkStatement {
  BooleanCircuit tmpl; // single output wire
  uint32_t n_const = 0; // leading template inputs bound per instance
  std::vector<BitString> inst_const; // one entry per instance, n_const bits
  std::vector<std::vector<uint32_t>> inst_wit; // witness index per remaining input
  size_t witness_len = 0;
  std::string kind;

  size_t instances() const { return inst_const.size(); }
  void validate() const;
  /// Plain evaluation of the conjunction; the test-side ground truth.
  bool eval_witness(const BitString& w) const;

  static ZkStatement from_circuit(BooleanCircuit c, std::string kind = "circuit");
};

struct ZkParams {
  unsigned lambda = 8;
  size_t rounds = 10; // soundness error (2/3)^rounds
  /// Commitment coins.  Empty: the verifier samples them and sends them as
  /// the session's first frame; otherwise both sides use this value (the
  /// enclosing protocol's coins).
  BitString rho;
};

/// Runs the prover side over an established connection.  Throws UsageError
/// on a malformed witness and ProtocolError if the verifier deviates.
void zk_prove(Conn& c, const ZkStatement& stmt, const BitString& witness,
              const ZkParams& params, Rng& rng);

/// Runs the verifier side; false on any failed check or malformed traffic.
bool zk_verify(Conn& c, const ZkStatement& stmt, const ZkParams& params, Rng& rng);

/// Adversarial fixture: a prover without a witness that plays the optimal
/// cheating strategy (one inconsistent pair per round), accepted with
/// probability at most (2/3)^rounds.
void zk_prove_cheating(Conn& c, const ZkStatement& stmt, const ZkParams& params, Rng& rng);

//===----------------------------------------------------------------------===//
// Simulator.  Produces an accepting transcript without a witness by guessing
// each round's challenge, asking the verifier hook, and retrying (rewinding)
// on a wrong guess.  The hook sees the round index and the pending commit
// payload and returns the challenge trit, or a value outside {0,1,2} to
// refuse.  More than 64 refused or mismatched attempts in one round abort
// the simulation.  params.rho must be set.
//===----------------------------------------------------------------------===//

using VerifierHook = std::function<int(size_t round, const std::vector<uint8_t>& commit_payload)>;

struct SimResult {
  std::vector<TranscriptEntry> transcript; // from: 0 = prover, 1 = verifier
  size_t hook_calls = 0;
};

SimResult zk_simulate(const ZkStatement& stmt, const ZkParams& params,
                      const VerifierHook& hook, Rng& rng);

/// Replays a (real or simulated) transcript through the verifier's checks.
/// params.rho must be set.
bool zk_transcript_accepts(const ZkStatement& stmt, const ZkParams& params,
                           const std::vector<TranscriptEntry>& transcript);

//===----------------------------------------------------------------------===//
// Statement compilers.  Further statement kinds are built by the protocols
// that need them, on top of the same ZkStatement shape.
//===----------------------------------------------------------------------===//

/// "c is a bit commitment to m": witness is the seed r with
/// naor_commit(rho, m, r) == c.
ZkStatement stmt_commit_opens_to(const BitString& rho, const BitString& c, bool m,
                                 unsigned lambda);

/// "every c_i is a valid string commitment, and those at the opened indices
/// commit to the claimed messages": witness is all masters plus all
/// messages; opened indices additionally pin the message to the public one.
ZkStatement stmt_socom_consistency(const BitString& rho, const std::vector<BitString>& cs,
                                   const std::vector<uint32_t>& open_idx,
                                   const std::vector<BitString>& opened_msgs,
                                   unsigned lambda, uint32_t msg_len);

/// Witness layout companion for stmt_socom_consistency: all k masters
/// (lambda bits each), then all k messages (msg_len bits each).
BitString socom_witness(const std::vector<BitString>& masters,
                        const std::vector<BitString>& msgs, unsigned lambda,
                        uint32_t msg_len);

} // namespace qot

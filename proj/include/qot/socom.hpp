#pragma once

#include "qot/zk.hpp"

#include <memory>
#include <mutex>

namespace qot {

//===----------------------------------------------------------------------===//
// Selective-opening commitment.
//
// The committer binds k messages up front; the receiver later names an index
// subset I and learns exactly those messages.  Opening never exposes the
// commitment seeds: the committer instead proves in zero knowledge that the
// revealed values match their commitments and that every unopened commitment
// is still well formed.  The receiver's coins rho serve both the string
// commitments and the embedded argument.
//
// Wire flow on one classical session, committer C and receiver R:
//
//   R -> C   RHO            rho, 3*lambda bits
//   C -> R   COMMITS        k serialized commitments (msg_len*3*lambda each)
//   R -> C   OPEN_REQUEST   u32 count, then count ascending u32 indices
//   C -> R   OPEN_REVEAL    the requested messages, in index order
//   C <-> R  the argument's frames
//===----------------------------------------------------------------------===//

struct SoComParams {
  unsigned lambda = 8;
  uint32_t k = 1;       // committed message count
  uint32_t msg_len = 1; // bits per message
  size_t zk_rounds = 10;
};

//===----------------------------------------------------------------------===//
// Backend endpoints.  Higher protocols talk to a selective-opening backend
// through these two interfaces so the plain protocol, the ideal oracle, and
// the extractable variant stay interchangeable.  serve_open returns the
// subset the peer asked for; request_open returns the revealed messages or
// throws if the opening fails to verify.
//===----------------------------------------------------------------------===//

struct SoComCommitEnd {
  virtual ~SoComCommitEnd() = default;
  virtual void commit(const std::vector<BitString>& msgs) = 0;
  virtual std::vector<uint32_t> serve_open() = 0;
};

struct SoComOpenEnd {
  virtual ~SoComOpenEnd() = default;
  virtual void await_commit() = 0;
  virtual std::vector<BitString> request_open(const std::vector<uint32_t>& idx) = 0;
};

//===----------------------------------------------------------------------===//
// Ideal functionality.  As a plain object it is the comparator oracle used
// by tests: commit records the messages once, reveal releases a subset once
// and records the choice.  committer_end/opener_end wrap the same object as
// backend endpoints for in-process composition; the endpoints move messages
// through shared memory and only pass receipt/choice notifications over the
// connection, so the scheduler still sees ordinary frame traffic.
//===----------------------------------------------------------------------===//

class FSoCom {
public:
  explicit FSoCom(const SoComParams& p) : p_(p) {}

  void commit(const std::vector<BitString>& msgs);
  std::vector<BitString> reveal(const std::vector<uint32_t>& idx);

  bool committed() const;
  bool revealed() const;
  /// The revealed index set; valid after reveal.
  std::vector<uint32_t> choice() const;

  const SoComParams& params() const { return p_; }

  std::unique_ptr<SoComCommitEnd> committer_end(Conn& c);
  std::unique_ptr<SoComOpenEnd> opener_end(Conn& c);

private:
  SoComParams p_;
  mutable std::mutex mu_;
  bool committed_ = false;
  bool revealed_ = false;
  std::vector<BitString> msgs_;
  std::vector<uint32_t> choice_;
};

//===----------------------------------------------------------------------===//
// The plain protocol.
//===----------------------------------------------------------------------===//

class SoComCommitter : public SoComCommitEnd {
public:
  SoComCommitter(Conn& c, const SoComParams& p, Rng& rng)
      : conn_(c), p_(p), rng_(rng) {}

  /// Waits for the receiver's coins, commits to each message under a fresh
  /// master seed, and sends the commitments.
  void commit(const std::vector<BitString>& msgs) override;

  /// Waits for the opening request, reveals the requested messages, and
  /// proves consistency; returns the requested subset.
  std::vector<uint32_t> serve_open() override;

  const BitString& rho() const { return rho_; }
  const std::vector<BitString>& commitments() const { return commits_; }

private:
  Conn& conn_;
  SoComParams p_;
  Rng& rng_;
  BitString rho_;
  std::vector<BitString> msgs_, masters_, commits_;
  bool committed_ = false;
  bool opened_ = false;
};

class SoComReceiver : public SoComOpenEnd {
public:
  SoComReceiver(Conn& c, const SoComParams& p, Rng& rng)
      : conn_(c), p_(p), rng_(rng) {}

  /// Samples and sends the coins, then takes delivery of the commitments.
  void await_commit() override;

  /// Requests the subset, receives the claimed messages, and verifies the
  /// consistency argument.  Throws ProtocolError if the argument rejects.
  std::vector<BitString> request_open(const std::vector<uint32_t>& idx) override;

  const BitString& rho() const { return rho_; }
  const std::vector<BitString>& commitments() const { return commits_; }

private:
  Conn& conn_;
  SoComParams p_;
  Rng& rng_;
  BitString rho_;
  std::vector<BitString> commits_;
  bool committed_ = false;
  bool opened_ = false;
};

/// Adversarial fixture: a committer that commits honestly but flips the
/// first bit of every requested message at open and plays the no-witness
/// cheating prover.  The receiver accepts with probability at most
/// (2/3)^zk_rounds.
void socom_commit_then_cheat(Conn& c, const SoComParams& p,
                             const std::vector<BitString>& msgs, Rng& rng);

//===----------------------------------------------------------------------===//
// Unbounded-committer extraction: open a commitment by enumerating every
// master seed.  Used by the sender-side simulator and by binding tests;
// practical only for small lambda, so seeds longer than 12 bits are refused.
//===----------------------------------------------------------------------===//

struct ExtractResult {
  enum Kind : uint8_t { Unique, Ambiguous, NoOpening } kind = NoOpening;
  BitString message; // set iff kind == Unique

  bool operator==(const ExtractResult&) const = default;
};

ExtractResult socom_extract_one(const BitString& rho, const BitString& commitment,
                                unsigned lambda, uint32_t msg_len);
std::vector<ExtractResult> socom_extract(const BitString& rho,
                                         const std::vector<BitString>& commitments,
                                         unsigned lambda, uint32_t msg_len);

} // namespace qot

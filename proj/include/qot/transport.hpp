#pragma once

#include "qot/bits.hpp"
#include "qot/qsim.hpp"

#include <condition_variable>
#include <deque>
#include <functional>
#include <memory>
#include <optional>
#include <thread>

namespace qot {

struct TransportError : QotError {
  using QotError::QotError;
};

enum class FrameKind : uint8_t { Classical = 0, QubitRef = 1, Control = 2 };

//===----------------------------------------------------------------------===//
// Frame: the unit of classical communication.
//
// Wire form: 4-byte little-endian total length (of everything after the
// length field), then session id (8), seq (4), kind (1), payload length (4),
// payload bytes.
//===----------------------------------------------------------------------===//

struct Frame {
  uint64_t session_id = 0;
  uint32_t seq = 0;
  FrameKind kind = FrameKind::Classical;
  std::vector<uint8_t> payload;

  void encode(std::vector<uint8_t>& out) const;
  bool operator==(const Frame&) const = default;
};

/// Incremental parser over a self-delimiting frame stream.
class FrameParser {
public:
  void feed(std::span<const uint8_t> data);
  std::optional<Frame> next();
  size_t buffered() const { return buf_.size() - pos_; }

private:
  std::vector<uint8_t> buf_;
  size_t pos_ = 0;
};

/// Qubit-reference payloads carry handle ids and nothing else.
std::vector<uint8_t> encode_qubit_refs(const std::vector<QubitRef>& refs);
std::vector<QubitRef> decode_qubit_refs(std::span<const uint8_t> payload);

struct TranscriptEntry {
  uint8_t from = 0; // sending side
  Frame frame;
  bool operator==(const TranscriptEntry&) const = default;
};

/// Canonical order for two one-sided views of the same session: ascending
/// seq, direction 0 before 1 on ties.  Stable across processes.
std::vector<TranscriptEntry> merge_transcript(const std::vector<TranscriptEntry>& a);

//===----------------------------------------------------------------------===//
// Conn: one party's endpoint of a session.  Stamps outgoing seq numbers,
// enforces strictly increasing incoming seq, and records a transcript.
//===----------------------------------------------------------------------===//

class Conn {
public:
  virtual ~Conn() = default;

  void send(FrameKind kind, std::vector<uint8_t> payload);
  Frame recv();

  uint64_t session() const { return session_; }
  const std::vector<TranscriptEntry>& transcript() const { return log_; }

  /// Convenience: classical payload of the next frame, requiring the kind.
  std::vector<uint8_t> recv_kind(FrameKind kind);

protected:
  explicit Conn(uint64_t session, uint8_t side) : session_(session), side_(side) {}

  virtual void send_impl(const Frame& f) = 0;
  virtual Frame recv_impl() = 0;

  uint64_t session_;
  uint8_t side_;
  uint32_t send_seq_ = 0;
  uint32_t recv_seq_ = 0;
  std::vector<TranscriptEntry> log_;
};

//===----------------------------------------------------------------------===//
// Deterministic in-process mode.
//
// Logically a single-threaded event loop: both parties run on worker
// threads, but a single activation token makes exactly one runnable at any
// time.  A party runs until it blocks on an empty inbox (or finishes); the
// token then passes to its peer.  Every cross-party effect funnels through
// the inboxes or the broker, both under the token, so a run is a pure
// function of inputs and seeds.  If both sides wait on empty inboxes the
// run is declared deadlocked and both blocked receives throw.
//===----------------------------------------------------------------------===//

using FrameFilter = std::function<bool(uint8_t from, const Frame&)>;

class InProcNet {
public:
  explicit InProcNet(uint64_t session_id, FrameFilter filter = {});
  ~InProcNet();

  /// Runs both parties to completion; rethrows party 0's exception first,
  /// then party 1's.
  void run(std::function<void(Conn&)> p0, std::function<void(Conn&)> p1);

  /// Like run, but party exceptions are captured instead of rethrown.
  void run_captured(std::function<void(Conn&)> p0, std::function<void(Conn&)> p1);

  bool deadlocked() const { return deadlock_; }
  std::exception_ptr party_error(int side) const { return err_[side]; }
  const std::vector<TranscriptEntry>& transcript() const { return global_; }
  Conn& side(int i);

private:
  class Endpoint;
  friend class Endpoint;

  bool runnable_locked(int side) const;
  void pass_token_locked(int from);

  uint64_t session_;
  FrameFilter filter_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<Frame> inbox_[2];
  bool blocked_[2] = {false, false};
  bool finished_[2] = {false, false};
  bool token_[2] = {false, false};
  bool deadlock_ = false;
  std::exception_ptr err_[2];
  std::vector<TranscriptEntry> global_;
  std::unique_ptr<Endpoint> ep_[2];
};

/// Replay endpoint: receives from a recorded incoming list, collects sends.
class ReplayConn : public Conn {
public:
  ReplayConn(uint64_t session, uint8_t side, std::vector<Frame> incoming)
      : Conn(session, side), in_(std::move(incoming)) {}

  const std::vector<Frame>& sent() const { return out_; }

private:
  void send_impl(const Frame& f) override { out_.push_back(f); }
  Frame recv_impl() override {
    if (pos_ >= in_.size()) throw TransportError("replay: incoming transcript exhausted");
    return in_[pos_++];
  }

  std::vector<Frame> in_;
  size_t pos_ = 0;
  std::vector<Frame> out_;
};

//===----------------------------------------------------------------------===//
// TCP mode.
//===----------------------------------------------------------------------===//

class TcpConn : public Conn {
public:
  /// Connect to host:port.
  TcpConn(uint64_t session, uint8_t side, const std::string& host, uint16_t port);
  /// Adopt an accepted socket.
  TcpConn(uint64_t session, uint8_t side, int fd);
  ~TcpConn() override;

  void close();
  int fd() const { return fd_; }

private:
  void send_impl(const Frame& f) override;
  Frame recv_impl() override;

  int fd_ = -1;
  FrameParser parser_;
};

/// Listen on port, accept n connections in arrival order, return their fds.
std::vector<int> tcp_accept(uint16_t port, int n);
int tcp_accept_one(uint16_t port);

/// Broker service: serves qsim requests from both parties over sockets.
/// Runs until both connections close.
void serve_broker(QubitBroker& broker, int fd_party0, int fd_party1);

/// Remote qsim access for a party process in TCP mode.
class RemoteQuantum : public QuantumApi {
public:
  RemoteQuantum(uint64_t session, PartyId me, const std::string& host, uint16_t port);

  PartyId self() const override { return me_; }
  QubitRef prepare(bool x, Basis theta) override;
  QubitRef transmit(QubitRef q, PartyId to) override;
  bool measure(QubitRef q, Basis theta_prime) override;
  std::pair<QubitRef, QubitRef> epr_pair() override;
  bool measure_biased(QubitRef q, Basis theta_prime, const MeasureBias& bias) override;

private:
  std::vector<uint8_t> rpc(uint8_t op, const std::vector<uint8_t>& body);

  PartyId me_;
  TcpConn conn_;
};

} // namespace qot

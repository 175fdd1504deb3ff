#include "qot/socom.hpp"

#include <algorithm>

namespace qot {
namespace {

template <class Err>
void check_subset(const std::vector<uint32_t>& idx, uint32_t k, const char* err) {
  for (size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] >= k) throw Err(err);
    if (i && idx[i] <= idx[i - 1]) throw Err(err);
  }
}

void check_messages(const std::vector<BitString>& msgs, const SoComParams& p) {
  if (msgs.size() != p.k) throw UsageError("message count mismatch");
  for (const auto& m : msgs)
    if (m.size() != p.msg_len) throw UsageError("message length mismatch");
}

std::vector<uint8_t> pack_subset(const std::vector<uint32_t>& idx) {
  ByteWriter w;
  w.u32(uint32_t(idx.size()));
  for (uint32_t i : idx) w.u32(i);
  return w.take();
}

std::vector<uint32_t> unpack_subset(std::span<const uint8_t> payload, uint32_t k) {
  ByteReader r(payload);
  uint32_t n = r.u32();
  if (n > k) throw ProtocolError("bad opening request");
  std::vector<uint32_t> idx(n);
  for (auto& i : idx) i = r.u32();
  r.finish();
  check_subset<ProtocolError>(idx, k, "bad opening request");
  return idx;
}

std::vector<uint8_t> pack_msgs(const std::vector<BitString>& msgs) {
  ByteWriter w;
  for (const auto& m : msgs) w.bits(m);
  return w.take();
}

std::vector<BitString> unpack_msgs(std::span<const uint8_t> payload, size_t n,
                                   uint32_t msg_len, const char* err) {
  ByteReader r(payload);
  std::vector<BitString> out;
  out.reserve(n);
  for (size_t i = 0; i < n; ++i) {
    out.push_back(r.bits());
    if (out.back().size() != msg_len) throw ProtocolError(err);
  }
  r.finish();
  return out;
}

ZkParams zk_params_for(const SoComParams& p, const BitString& rho) {
  ZkParams zp;
  zp.lambda = p.lambda;
  zp.rounds = p.zk_rounds;
  zp.rho = rho;
  return zp;
}

} // namespace

//===----------------------------------------------------------------------===//
// Ideal functionality
//===----------------------------------------------------------------------===//

void FSoCom::commit(const std::vector<BitString>& msgs) {
  check_messages(msgs, p_);
  std::lock_guard lk(mu_);
  if (committed_) throw UsageError("duplicate commit");
  msgs_ = msgs;
  committed_ = true;
}

std::vector<BitString> FSoCom::reveal(const std::vector<uint32_t>& idx) {
  std::lock_guard lk(mu_);
  if (!committed_) throw UsageError("reveal before commit");
  if (revealed_) throw UsageError("duplicate reveal");
  check_subset<UsageError>(idx, p_.k, "bad index subset");
  choice_ = idx;
  revealed_ = true;
  std::vector<BitString> out;
  for (uint32_t i : idx) out.push_back(msgs_[i]);
  return out;
}

bool FSoCom::committed() const {
  std::lock_guard lk(mu_);
  return committed_;
}

bool FSoCom::revealed() const {
  std::lock_guard lk(mu_);
  return revealed_;
}

std::vector<uint32_t> FSoCom::choice() const {
  std::lock_guard lk(mu_);
  if (!revealed_) throw UsageError("no reveal recorded");
  return choice_;
}

namespace {

// Endpoint views of the ideal object.  Messages live in the shared state;
// only receipt and choice notifications travel, as control frames, so a
// scheduler or an interposed filter sees the functionality's announcements
// without ever seeing its contents.

class FCommitEnd : public SoComCommitEnd {
public:
  FCommitEnd(Conn& c, FSoCom& f) : conn_(c), f_(f) {}

  void commit(const std::vector<BitString>& msgs) override {
    f_.commit(msgs);
    conn_.send(FrameKind::Control, {});
  }

  std::vector<uint32_t> serve_open() override {
    if (!f_.committed()) throw UsageError("open before commit");
    conn_.recv_kind(FrameKind::Control);
    return f_.choice();
  }

private:
  Conn& conn_;
  FSoCom& f_;
};

class FOpenEnd : public SoComOpenEnd {
public:
  FOpenEnd(Conn& c, FSoCom& f) : conn_(c), f_(f) {}

  void await_commit() override {
    conn_.recv_kind(FrameKind::Control);
    if (!f_.committed()) throw ProtocolError("receipt without a commit");
  }

  std::vector<BitString> request_open(const std::vector<uint32_t>& idx) override {
    auto msgs = f_.reveal(idx);
    conn_.send(FrameKind::Control, pack_subset(idx));
    return msgs;
  }

private:
  Conn& conn_;
  FSoCom& f_;
};

} // namespace

std::unique_ptr<SoComCommitEnd> FSoCom::committer_end(Conn& c) {
  return std::make_unique<FCommitEnd>(c, *this);
}

std::unique_ptr<SoComOpenEnd> FSoCom::opener_end(Conn& c) {
  return std::make_unique<FOpenEnd>(c, *this);
}

//===----------------------------------------------------------------------===//
// Plain protocol
//===----------------------------------------------------------------------===//

void SoComCommitter::commit(const std::vector<BitString>& msgs) {
  if (committed_) throw UsageError("duplicate commit");
  CfPrg::check_lambda(p_.lambda);
  check_messages(msgs, p_);

  auto rho_pl = conn_.recv_kind(FrameKind::Classical);
  ByteReader r(rho_pl);
  rho_ = r.bits();
  r.finish();
  if (rho_.size() != 3 * p_.lambda) throw ProtocolError("bad coin frame");

  for (const auto& m : msgs) {
    masters_.push_back(rng_.bits(p_.lambda));
    commits_.push_back(naor_commit_str(rho_, m, masters_.back()));
  }
  ByteWriter w;
  for (const auto& c : commits_) w.bits(c);
  conn_.send(FrameKind::Classical, w.take());
  msgs_ = msgs;
  committed_ = true;
}

std::vector<uint32_t> SoComCommitter::serve_open() {
  if (!committed_) throw UsageError("open before commit");
  if (opened_) throw UsageError("duplicate open");

  auto idx = unpack_subset(conn_.recv_kind(FrameKind::Classical), p_.k);
  std::vector<BitString> revealed;
  for (uint32_t i : idx) revealed.push_back(msgs_[i]);
  conn_.send(FrameKind::Classical, pack_msgs(revealed));

  auto stmt = stmt_socom_consistency(rho_, commits_, idx, revealed, p_.lambda, p_.msg_len);
  zk_prove(conn_, stmt, socom_witness(masters_, msgs_, p_.lambda, p_.msg_len),
           zk_params_for(p_, rho_), rng_);
  opened_ = true;
  return idx;
}

void SoComReceiver::await_commit() {
  if (committed_) throw UsageError("duplicate commit");
  CfPrg::check_lambda(p_.lambda);
  rho_ = rng_.bits(3 * p_.lambda);
  ByteWriter w;
  w.bits(rho_);
  conn_.send(FrameKind::Classical, w.take());

  auto pl = conn_.recv_kind(FrameKind::Classical);
  ByteReader r(pl);
  for (uint32_t i = 0; i < p_.k; ++i) {
    commits_.push_back(r.bits());
    if (commits_.back().size() != size_t(p_.msg_len) * 3 * p_.lambda)
      throw ProtocolError("bad commitment frame");
  }
  r.finish();
  committed_ = true;
}

std::vector<BitString> SoComReceiver::request_open(const std::vector<uint32_t>& idx) {
  if (!committed_) throw UsageError("open before commit");
  if (opened_) throw UsageError("duplicate open");
  for (size_t i = 0; i < idx.size(); ++i)
    if (idx[i] >= p_.k || (i && idx[i] <= idx[i - 1]))
      throw UsageError("bad index subset");

  conn_.send(FrameKind::Classical, pack_subset(idx));
  auto revealed = unpack_msgs(conn_.recv_kind(FrameKind::Classical), idx.size(),
                              p_.msg_len, "bad reveal frame");

  auto stmt = stmt_socom_consistency(rho_, commits_, idx, revealed, p_.lambda, p_.msg_len);
  if (!zk_verify(conn_, stmt, zk_params_for(p_, rho_), rng_))
    throw ProtocolError("selective opening rejected");
  opened_ = true;
  return revealed;
}

void socom_commit_then_cheat(Conn& c, const SoComParams& p,
                             const std::vector<BitString>& msgs, Rng& rng) {
  SoComCommitter honest(c, p, rng);
  honest.commit(msgs);

  auto idx = unpack_subset(c.recv_kind(FrameKind::Classical), p.k);
  std::vector<BitString> lies;
  for (uint32_t i : idx) {
    BitString m = msgs[i];
    m.set(0, !m.get(0));
    lies.push_back(std::move(m));
  }
  c.send(FrameKind::Classical, pack_msgs(lies));

  auto stmt = stmt_socom_consistency(honest.rho(), honest.commitments(), idx, lies,
                                     p.lambda, p.msg_len);
  zk_prove_cheating(c, stmt, zk_params_for(p, honest.rho()), rng);
}

//===----------------------------------------------------------------------===//
// Extraction
//===----------------------------------------------------------------------===//

ExtractResult socom_extract_one(const BitString& rho, const BitString& commitment,
                                unsigned lambda, uint32_t msg_len) {
  if (lambda > 12) throw UsageError("lambda too large for exhaustive extraction");
  CfPrg::check_lambda(lambda);
  if (rho.size() != 3 * lambda) throw UsageError("rho length mismatch");
  if (commitment.size() != size_t(msg_len) * 3 * lambda)
    throw UsageError("commitment length mismatch");

  ExtractResult res;
  for (uint64_t seed = 0; seed < (uint64_t(1) << lambda); ++seed) {
    BitString master = BitString::from_u64(seed, lambda);
    BitString msg;
    bool opens = true;
    for (uint32_t j = 0; j < msg_len && opens; ++j) {
      BitString pad = CfPrg::block(master, j);
      BitString slice = commitment.substr(size_t(j) * 3 * lambda, 3 * lambda);
      if (slice == pad)
        msg.append(false);
      else if (slice == (pad ^ rho))
        msg.append(true);
      else
        opens = false;
    }
    if (!opens) continue;
    if (res.kind == ExtractResult::Unique && res.message != msg)
      return {ExtractResult::Ambiguous, {}};
    res = {ExtractResult::Unique, std::move(msg)};
  }
  return res;
}

std::vector<ExtractResult> socom_extract(const BitString& rho,
                                         const std::vector<BitString>& commitments,
                                         unsigned lambda, uint32_t msg_len) {
  std::vector<ExtractResult> out;
  out.reserve(commitments.size());
  for (const auto& c : commitments)
    out.push_back(socom_extract_one(rho, c, lambda, msg_len));
  return out;
}

} // namespace qot

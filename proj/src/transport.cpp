#include "qot/transport.hpp"

#include <algorithm>

namespace qot {

//===----------------------------------------------------------------------===//
// Frame encoding
//===----------------------------------------------------------------------===//

void Frame::encode(std::vector<uint8_t>& out) const {
  ByteWriter bw;
  bw.u32(uint32_t(17 + payload.size()));
  bw.u64(session_id);
  bw.u32(seq);
  bw.u8(uint8_t(kind));
  bw.u32(uint32_t(payload.size()));
  bw.bytes(payload);
  auto v = bw.take();
  out.insert(out.end(), v.begin(), v.end());
}

void FrameParser::feed(std::span<const uint8_t> data) {
  buf_.insert(buf_.end(), data.begin(), data.end());
}

std::optional<Frame> FrameParser::next() {
  auto avail = [&] { return buf_.size() - pos_; };
  if (avail() < 4) return std::nullopt;
  uint32_t total = 0;
  for (int i = 0; i < 4; ++i) total |= uint32_t(buf_[pos_ + i]) << (8 * i);
  if (total < 17) throw TransportError("malformed frame: short header");
  if (avail() < 4 + size_t(total)) return std::nullopt;

  ByteReader br(std::span<const uint8_t>(buf_.data() + pos_ + 4, total));
  Frame f;
  f.session_id = br.u64();
  f.seq = br.u32();
  uint8_t kind = br.u8();
  if (kind > 2) throw TransportError("malformed frame: bad kind");
  f.kind = FrameKind(kind);
  uint32_t plen = br.u32();
  if (17 + size_t(plen) != total) throw TransportError("malformed frame: length mismatch");
  f.payload.assign(buf_.begin() + pos_ + 4 + 17, buf_.begin() + pos_ + 4 + total);
  pos_ += 4 + size_t(total);
  if (pos_ > 65536 && pos_ * 2 > buf_.size()) {
    buf_.erase(buf_.begin(), buf_.begin() + pos_);
    pos_ = 0;
  }
  return f;
}

std::vector<uint8_t> encode_qubit_refs(const std::vector<QubitRef>& refs) {
  ByteWriter bw;
  bw.u32(uint32_t(refs.size()));
  for (auto r : refs) bw.u64(r.id);
  return bw.take();
}

std::vector<QubitRef> decode_qubit_refs(std::span<const uint8_t> payload) {
  ByteReader br(payload);
  uint32_t n = br.u32();
  std::vector<QubitRef> refs(n);
  for (uint32_t i = 0; i < n; ++i) refs[i].id = br.u64();
  br.finish();
  return refs;
}

std::vector<TranscriptEntry> merge_transcript(const std::vector<TranscriptEntry>& a) {
  std::vector<TranscriptEntry> out = a;
  std::stable_sort(out.begin(), out.end(), [](const TranscriptEntry& x, const TranscriptEntry& y) {
    if (x.frame.seq != y.frame.seq) return x.frame.seq < y.frame.seq;
    return x.from < y.from;
  });
  return out;
}

//===----------------------------------------------------------------------===//
// Conn
//===----------------------------------------------------------------------===//

void Conn::send(FrameKind kind, std::vector<uint8_t> payload) {
  Frame f;
  f.session_id = session_;
  f.seq = send_seq_++;
  f.kind = kind;
  f.payload = std::move(payload);
  log_.push_back({side_, f});
  send_impl(f);
}

Frame Conn::recv() {
  Frame f = recv_impl();
  if (f.session_id != session_) throw TransportError("frame for a different session");
  if (f.seq != recv_seq_) throw TransportError("out-of-order frame");
  ++recv_seq_;
  log_.push_back({uint8_t(1 - side_), f});
  return f;
}

std::vector<uint8_t> Conn::recv_kind(FrameKind kind) {
  Frame f = recv();
  if (f.kind != kind) throw TransportError("unexpected frame kind");
  return std::move(f.payload);
}

//===----------------------------------------------------------------------===//
// InProcNet
//===----------------------------------------------------------------------===//

class InProcNet::Endpoint : public Conn {
public:
  Endpoint(InProcNet& net, uint8_t side) : Conn(net.session_, side), net_(net) {}

private:
  void send_impl(const Frame& f) override {
    std::lock_guard<std::mutex> lk(net_.mu_);
    if (net_.filter_ && !net_.filter_(side_, f)) return; // injected loss
    net_.inbox_[1 - side_].push_back(f);
    net_.global_.push_back({side_, f});
  }

  Frame recv_impl() override {
    std::unique_lock<std::mutex> lk(net_.mu_);
    int me = side_;
    for (;;) {
      if (!net_.inbox_[me].empty()) {
        Frame f = std::move(net_.inbox_[me].front());
        net_.inbox_[me].pop_front();
        return f;
      }
      if (net_.deadlock_) throw TransportError("deadlock: no party can make progress");
      net_.blocked_[me] = true;
      net_.pass_token_locked(me);
      net_.cv_.wait(lk, [&] { return net_.token_[me] || net_.deadlock_; });
      net_.blocked_[me] = false;
      if (net_.deadlock_ && net_.inbox_[me].empty())
        throw TransportError("deadlock: no party can make progress");
    }
  }

  InProcNet& net_;
};

InProcNet::InProcNet(uint64_t session_id, FrameFilter filter)
    : session_(session_id), filter_(std::move(filter)) {
  ep_[0] = std::make_unique<Endpoint>(*this, 0);
  ep_[1] = std::make_unique<Endpoint>(*this, 1);
}

InProcNet::~InProcNet() = default;

Conn& InProcNet::side(int i) { return *ep_[i]; }

bool InProcNet::runnable_locked(int side) const {
  if (finished_[side]) return false;
  return !blocked_[side] || !inbox_[side].empty();
}

void InProcNet::pass_token_locked(int from) {
  token_[from] = false;
  int other = 1 - from;
  if (runnable_locked(other))
    token_[other] = true;
  else if (!finished_[from] || !finished_[other])
    deadlock_ = true; // someone still waits, nobody can act
  cv_.notify_all();
}

void InProcNet::run_captured(std::function<void(Conn&)> p0, std::function<void(Conn&)> p1) {
  std::function<void(Conn&)> fns[2] = {std::move(p0), std::move(p1)};
  std::thread threads[2];
  for (int i = 0; i < 2; ++i) {
    threads[i] = std::thread([this, i, fn = std::move(fns[i])] {
      {
        std::unique_lock<std::mutex> lk(mu_);
        cv_.wait(lk, [&] { return token_[i] || deadlock_; });
      }
      try {
        if (!deadlock_) fn(*ep_[i]);
      } catch (...) {
        err_[i] = std::current_exception();
      }
      std::lock_guard<std::mutex> lk(mu_);
      finished_[i] = true;
      blocked_[i] = false;
      pass_token_locked(i);
    });
  }
  {
    std::lock_guard<std::mutex> lk(mu_);
    token_[0] = true;
    cv_.notify_all();
  }
  threads[0].join();
  threads[1].join();
}

void InProcNet::run(std::function<void(Conn&)> p0, std::function<void(Conn&)> p1) {
  run_captured(std::move(p0), std::move(p1));
  if (err_[0]) std::rethrow_exception(err_[0]);
  if (err_[1]) std::rethrow_exception(err_[1]);
}

} // namespace qot

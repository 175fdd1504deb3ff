#include "qot/bbcs.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace qot {

namespace {

// Announce an abort so the peer fails promptly instead of blocking, then
// throw.  The notification is best-effort; the connection may already be
// gone.
[[noreturn]] void fail_abort(Conn& conn, const std::string& reason) {
  try {
    conn.send(FrameKind::Control, std::vector<uint8_t>(reason.begin(), reason.end()));
  } catch (const TransportError&) {
  }
  throw ProtocolError(reason);
}

std::vector<uint8_t> recv_step(Conn& conn, FrameKind want) {
  Frame f = conn.recv();
  if (f.kind == FrameKind::Control && want != FrameKind::Control)
    throw ProtocolError("peer aborted: " + std::string(f.payload.begin(), f.payload.end()));
  if (f.kind != want) throw TransportError("unexpected frame kind");
  return std::move(f.payload);
}

// Uniform t-subset of {0..n-1}, ascending.
std::vector<uint32_t> sample_subset(uint32_t n, uint32_t t, Rng& rng) {
  std::vector<uint32_t> idx(n);
  for (uint32_t i = 0; i < n; ++i) idx[i] = i;
  for (uint32_t i = 0; i < t; ++i) std::swap(idx[i], idx[i + uint32_t(rng.below(n - i))]);
  idx.resize(t);
  std::sort(idx.begin(), idx.end());
  return idx;
}

// x restricted to idx (ascending), zero-padded up to n bits.
BitString pad_restrict(const BitString& x, const std::vector<uint32_t>& idx, uint32_t n) {
  BitString out(n);
  for (size_t k = 0; k < idx.size(); ++k) out.set(k, x.get(idx[k]));
  return out;
}

std::vector<uint32_t> complement_of(const std::vector<uint32_t>& sub, uint32_t n) {
  std::vector<uint32_t> out;
  out.reserve(n - sub.size());
  size_t p = 0;
  for (uint32_t i = 0; i < n; ++i) {
    if (p < sub.size() && sub[p] == i) {
      ++p;
      continue;
    }
    out.push_back(i);
  }
  return out;
}

void write_partition(ByteWriter& w, const std::vector<uint32_t>& i0,
                     const std::vector<uint32_t>& i1) {
  w.u32(uint32_t(i0.size()));
  for (uint32_t v : i0) w.u32(v);
  w.u32(uint32_t(i1.size()));
  for (uint32_t v : i1) w.u32(v);
}

std::vector<uint32_t> read_index_list(ByteReader& r) {
  uint32_t cnt = r.u32();
  std::vector<uint32_t> out(cnt);
  for (uint32_t i = 0; i < cnt; ++i) out[i] = r.u32();
  return out;
}

// A valid partition of {0..range-1}: both lists strictly ascending, in
// range, disjoint, jointly covering.
bool partition_ok(const std::vector<uint32_t>& i0, const std::vector<uint32_t>& i1,
                  uint32_t range) {
  if (i0.size() + i1.size() != range) return false;
  std::vector<bool> seen(range, false);
  for (const auto* list : {&i0, &i1}) {
    for (size_t k = 0; k < list->size(); ++k) {
      uint32_t v = (*list)[k];
      if (v >= range || seen[v]) return false;
      if (k > 0 && (*list)[k - 1] >= v) return false;
      seen[v] = true;
    }
  }
  return true;
}

} // namespace

uint32_t QotParams::t_check() const { return uint32_t(std::lround(alpha * n)); }

void QotParams::validate() const {
  if (n == 0 || l == 0) throw UsageError("qot: empty dimensions");
  if (!(alpha > 0.25 && alpha < 0.5)) throw UsageError("qot: alpha out of range");
  uint32_t t = t_check();
  if (t == 0 || t >= n) throw UsageError("qot: unusable check size");
  if (n < 2 * l) throw UsageError("qot: n too small for l");
  if (n < lambda) throw UsageError("qot: n below the security floor");
  CfPrg::check_lambda(lambda);
}

SoComParams qot_socom_params(const QotParams& p, uint32_t instances) {
  SoComParams sp;
  sp.lambda = p.lambda;
  sp.k = instances * p.n;
  sp.msg_len = 2;
  sp.zk_rounds = p.zk_rounds;
  return sp;
}

//===----------------------------------------------------------------------===//
// Preamble
//===----------------------------------------------------------------------===//

SenderPreamble qot_preamble_send(Conn& conn, QuantumApi& q, uint32_t count, Rng& rng, bool epr) {
  if (epr) {
    SenderPreamble pre;
    PartyId to = PartyId(1 - q.self());
    std::vector<QubitRef> shipped;
    shipped.reserve(count);
    pre.kept.reserve(count);
    for (uint32_t i = 0; i < count; ++i) {
      auto [mine, theirs] = q.epr_pair();
      pre.kept.push_back(mine);
      shipped.push_back(q.transmit(theirs, to));
    }
    conn.send(FrameKind::QubitRef, encode_qubit_refs(shipped));
    return pre;
  }
  BitString x = rng.bits(count);
  BitString theta = rng.bits(count);
  return qot_preamble_send_explicit(conn, q, x, theta);
}

SenderPreamble qot_preamble_send_explicit(Conn& conn, QuantumApi& q, const BitString& x,
                                          const BitString& theta) {
  if (x.size() != theta.size()) throw UsageError("preamble: length mismatch");
  SenderPreamble pre;
  pre.x = x;
  pre.theta = theta;
  PartyId to = PartyId(1 - q.self());
  std::vector<QubitRef> shipped;
  shipped.reserve(x.size());
  for (size_t i = 0; i < x.size(); ++i) {
    QubitRef r = q.prepare(x.get(i), basis_from_bit(theta.get(i)));
    shipped.push_back(q.transmit(r, to));
  }
  conn.send(FrameKind::QubitRef, encode_qubit_refs(shipped));
  return pre;
}

void qot_preamble_measure_delayed(SenderPreamble& pre, QuantumApi& q, Rng& rng) {
  qot_preamble_measure_delayed_explicit(pre, q, rng.bits(pre.kept.size()));
}

void qot_preamble_measure_delayed_explicit(SenderPreamble& pre, QuantumApi& q,
                                           const BitString& theta) {
  if (theta.size() != pre.kept.size()) throw UsageError("preamble: length mismatch");
  BitString x(pre.kept.size());
  for (size_t i = 0; i < pre.kept.size(); ++i)
    x.set(i, q.measure(pre.kept[i], basis_from_bit(theta.get(i))));
  pre.x = std::move(x);
  pre.theta = theta;
  pre.kept.clear();
}

std::pair<BitString, BitString> qot_preamble_receive(Conn& conn, QuantumApi& q, uint32_t count,
                                                     Rng& rng) {
  auto refs = decode_qubit_refs(recv_step(conn, FrameKind::QubitRef));
  if (refs.size() != count) throw ProtocolError("bad qubit frame");
  BitString theta = rng.bits(count);
  BitString x(count);
  for (uint32_t i = 0; i < count; ++i) x.set(i, q.measure(refs[i], basis_from_bit(theta.get(i))));
  return {std::move(theta), std::move(x)};
}

//===----------------------------------------------------------------------===//
// Sender
//===----------------------------------------------------------------------===//

std::vector<QotSenderView> pot_send(Conn& conn, QuantumApi& q, SoComOpenEnd& backend,
                                    const QotParams& p, uint32_t instances,
                                    const std::vector<std::array<BitString, 2>>& secrets,
                                    Rng& rng, bool epr_preamble) {
  p.validate();
  if (instances == 0) throw UsageError("qot: no instances");
  if (secrets.size() != instances) throw UsageError("qot: secret count mismatch");
  for (const auto& s : secrets)
    if (s[0].size() != p.l || s[1].size() != p.l) throw UsageError("qot: secret length mismatch");

  const uint32_t n = p.n, t = p.t_check(), nh = n - t;
  SenderPreamble pre = qot_preamble_send(conn, q, instances * n, rng, epr_preamble);
  backend.await_commit();
  if (epr_preamble) qot_preamble_measure_delayed(pre, q, rng);

  // One opening request covers every instance's check subset; instance-major
  // order keeps the merged index list ascending.
  std::vector<std::vector<uint32_t>> checked(instances);
  std::vector<uint32_t> merged;
  merged.reserve(size_t(instances) * t);
  for (uint32_t inst = 0; inst < instances; ++inst) {
    checked[inst] = sample_subset(n, t, rng);
    for (uint32_t v : checked[inst]) merged.push_back(inst * n + v);
  }
  std::vector<BitString> records;
  try {
    records = backend.request_open(merged);
  } catch (const ProtocolError& e) {
    fail_abort(conn, std::string("opening rejected: ") + e.what());
  }
  if (records.size() != merged.size()) throw ProtocolError("bad opening");
  for (size_t j = 0; j < merged.size(); ++j) {
    if (records[j].size() != 2) throw ProtocolError("bad opening");
    uint32_t gi = merged[j];
    bool same_basis = records[j].get(0) == pre.theta.get(gi);
    if (same_basis && records[j].get(1) != pre.x.get(gi))
      fail_abort(conn, "measured outcome check failed");
  }

  // Surviving positions, reindexed ascending per instance.
  std::vector<QotSenderView> views(instances);
  BitString bases_hat;
  std::vector<BitString> x_hat(instances);
  for (uint32_t inst = 0; inst < instances; ++inst) {
    views[inst].x = pre.x.substr(size_t(inst) * n, n);
    views[inst].theta = pre.theta.substr(size_t(inst) * n, n);
    views[inst].checked = checked[inst];
    auto surv = complement_of(checked[inst], n);
    BitString th(nh), xh(nh);
    for (uint32_t j = 0; j < nh; ++j) {
      th.set(j, views[inst].theta.get(surv[j]));
      xh.set(j, views[inst].x.get(surv[j]));
    }
    bases_hat.append(th);
    x_hat[inst] = std::move(xh);
  }
  {
    ByteWriter w;
    w.bits(bases_hat);
    conn.send(FrameKind::Classical, w.take());
  }

  {
    auto payload = recv_step(conn, FrameKind::Classical);
    ByteReader r(payload);
    try {
      for (uint32_t inst = 0; inst < instances; ++inst) {
        views[inst].i0 = read_index_list(r);
        views[inst].i1 = read_index_list(r);
      }
      r.finish();
    } catch (const QotError&) {
      fail_abort(conn, "bad partition frame");
    }
  }
  for (uint32_t inst = 0; inst < instances; ++inst)
    if (!partition_ok(views[inst].i0, views[inst].i1, nh))
      fail_abort(conn, "malformed partition");

  ByteWriter w;
  for (uint32_t inst = 0; inst < instances; ++inst) {
    QotSenderView& v = views[inst];
    v.f = uh_sample(n, p.l, rng);
    v.m0 = secrets[inst][0] ^ uh_apply(v.f, pad_restrict(x_hat[inst], v.i0, n));
    v.m1 = secrets[inst][1] ^ uh_apply(v.f, pad_restrict(x_hat[inst], v.i1, n));
    auto fb = v.f.serialize();
    w.u32(uint32_t(fb.size()));
    w.bytes(fb);
    w.bits(v.m0);
    w.bits(v.m1);
  }
  conn.send(FrameKind::Classical, w.take());
  return views;
}

QotSenderView qot_send(Conn& conn, QuantumApi& q, SoComOpenEnd& backend, const QotParams& p,
                       const BitString& s0, const BitString& s1, Rng& rng, bool epr_preamble) {
  auto views = pot_send(conn, q, backend, p, 1, {{{s0, s1}}}, rng, epr_preamble);
  return std::move(views[0]);
}

//===----------------------------------------------------------------------===//
// Receiver
//===----------------------------------------------------------------------===//

std::vector<QotReceiverView> pot_receive(Conn& conn, QuantumApi& q, SoComCommitEnd& backend,
                                         const QotParams& p, uint32_t instances,
                                         const BitString& choices, Rng& rng,
                                         const QotReceiverHooks* hooks) {
  p.validate();
  if (instances == 0) throw UsageError("qot: no instances");
  if (choices.size() != instances) throw UsageError("qot: choice count mismatch");

  const uint32_t n = p.n;
  auto refs = decode_qubit_refs(recv_step(conn, FrameKind::QubitRef));
  if (refs.size() != size_t(instances) * n) throw ProtocolError("bad qubit frame");

  std::vector<QotReceiverView> views(instances);
  std::vector<BitString> records;
  records.reserve(refs.size());
  for (uint32_t inst = 0; inst < instances; ++inst) {
    std::vector<QubitRef> chunk(refs.begin() + size_t(inst) * n,
                                refs.begin() + size_t(inst + 1) * n);
    std::optional<std::pair<BitString, BitString>> forced;
    if (hooks && hooks->preamble) forced = hooks->preamble(inst, q, chunk, rng);
    if (forced) {
      views[inst].theta = std::move(forced->first);
      views[inst].x = std::move(forced->second);
      if (views[inst].theta.size() != n || views[inst].x.size() != n)
        throw UsageError("qot: hook output length mismatch");
    } else {
      views[inst].theta = rng.bits(n);
      BitString x(n);
      for (uint32_t i = 0; i < n; ++i)
        x.set(i, q.measure(chunk[i], basis_from_bit(views[inst].theta.get(i))));
      views[inst].x = std::move(x);
    }
    for (uint32_t i = 0; i < n; ++i) {
      BitString rec(2);
      rec.set(0, views[inst].theta.get(i));
      rec.set(1, views[inst].x.get(i));
      records.push_back(std::move(rec));
    }
  }
  backend.commit(records);

  auto merged = backend.serve_open();
  std::vector<std::vector<uint32_t>> checked(instances);
  for (uint32_t v : merged) {
    if (v >= size_t(instances) * n) throw ProtocolError("bad opening request");
    checked[v / n].push_back(v % n);
  }

  // Surviving positions per instance; sizes depend on the sender's subsets.
  std::vector<std::vector<uint32_t>> surv(instances);
  size_t total_surv = 0;
  for (uint32_t inst = 0; inst < instances; ++inst) {
    surv[inst] = complement_of(checked[inst], n);
    total_surv += surv[inst].size();
  }

  BitString bases_hat;
  {
    auto payload = recv_step(conn, FrameKind::Classical);
    ByteReader r(payload);
    try {
      bases_hat = r.bits();
      r.finish();
    } catch (const QotError&) {
      fail_abort(conn, "bad bases frame");
    }
  }
  if (bases_hat.size() != total_surv) fail_abort(conn, "bad bases frame");

  ByteWriter w;
  size_t base_off = 0;
  std::vector<std::vector<uint32_t>> mine(instances);
  for (uint32_t inst = 0; inst < instances; ++inst) {
    uint32_t nh = uint32_t(surv[inst].size());
    std::vector<uint32_t> agree, differ;
    for (uint32_t j = 0; j < nh; ++j) {
      bool their = bases_hat.get(base_off + j);
      bool ours = views[inst].theta.get(surv[inst][j]);
      (their == ours ? agree : differ).push_back(j);
    }
    base_off += nh;
    bool c = choices.get(inst);
    views[inst].i0 = c ? differ : agree;
    views[inst].i1 = c ? std::move(agree) : std::move(differ);
    if (hooks && hooks->partition) hooks->partition(inst, views[inst].i0, views[inst].i1);
    mine[inst] = c ? views[inst].i1 : views[inst].i0;
    write_partition(w, views[inst].i0, views[inst].i1);
  }
  conn.send(FrameKind::Classical, w.take());

  {
    auto payload = recv_step(conn, FrameKind::Classical);
    ByteReader r(payload);
    for (uint32_t inst = 0; inst < instances; ++inst) {
      UniversalHash f;
      BitString m0, m1;
      try {
        uint32_t flen = r.u32();
        r.need(flen);
        f = UniversalHash::deserialize(r.buf.subspan(r.off, flen));
        r.off += flen;
        m0 = r.bits();
        m1 = r.bits();
      } catch (const QotError&) {
        fail_abort(conn, "bad transfer frame");
      }
      if (f.n != n || f.l != p.l || m0.size() != p.l || m1.size() != p.l)
        fail_abort(conn, "bad transfer frame");
      BitString xh(uint32_t(surv[inst].size()));
      for (uint32_t j = 0; j < surv[inst].size(); ++j)
        xh.set(j, views[inst].x.get(surv[inst][j]));
      const BitString& m = choices.get(inst) ? m1 : m0;
      views[inst].out = m ^ uh_apply(f, pad_restrict(xh, mine[inst], n));
    }
    try {
      r.finish();
    } catch (const QotError&) {
      fail_abort(conn, "bad transfer frame");
    }
  }
  return views;
}

QotReceiverView qot_receive(Conn& conn, QuantumApi& q, SoComCommitEnd& backend,
                            const QotParams& p, bool choice, Rng& rng,
                            const QotReceiverHooks* hooks) {
  BitString c(1);
  c.set(0, choice);
  auto views = pot_receive(conn, q, backend, p, 1, c, rng, hooks);
  return std::move(views[0]);
}

//===----------------------------------------------------------------------===//
// Ideal functionality
//===----------------------------------------------------------------------===//

FPot::FPot(uint32_t instances, uint32_t l) : instances_(instances), l_(l) {
  if (instances == 0 || l == 0) throw UsageError("fpot: empty dimensions");
}

void FPot::sender_query(const std::vector<std::array<BitString, 2>>& secrets) {
  if (recorded_) return;
  if (secrets.size() != instances_) throw UsageError("fpot: secret count mismatch");
  for (const auto& s : secrets)
    if (s[0].size() != l_ || s[1].size() != l_) throw UsageError("fpot: secret length mismatch");
  secrets_ = secrets;
  recorded_ = true;
}

std::optional<std::vector<BitString>> FPot::receiver_query(const BitString& choices) {
  if (choices.size() != instances_) throw UsageError("fpot: choice count mismatch");
  if (!recorded_) return std::nullopt;
  std::vector<BitString> out;
  out.reserve(instances_);
  for (uint32_t i = 0; i < instances_; ++i) out.push_back(secrets_[i][choices.get(i) ? 1 : 0]);
  return out;
}

} // namespace qot

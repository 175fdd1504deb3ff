#include "qot/zk.hpp"

#include <algorithm>
#include <optional>

namespace qot {

//===----------------------------------------------------------------------===//
// Statement
//===----------------------------------------------------------------------===//

void ZkStatement::validate() const {
  tmpl.validate();
  if (tmpl.outputs.size() != 1) throw UsageError("statement template must have 1 output");
  if (inst_const.empty()) throw UsageError("statement has no instances");
  if (inst_const.size() != inst_wit.size()) throw UsageError("instance table size mismatch");
  if (n_const > tmpl.n_inputs) throw UsageError("n_const exceeds template inputs");
  size_t n_wit = tmpl.n_inputs - n_const;
  for (size_t i = 0; i < inst_const.size(); ++i) {
    if (inst_const[i].size() != n_const) throw UsageError("instance constant length mismatch");
    if (inst_wit[i].size() != n_wit) throw UsageError("instance witness map length mismatch");
    for (uint32_t idx : inst_wit[i])
      if (idx >= witness_len) throw UsageError("witness index out of range");
  }
}

bool ZkStatement::eval_witness(const BitString& w) const {
  if (w.size() != witness_len) throw UsageError("witness length mismatch");
  BitString in(tmpl.n_inputs);
  for (size_t i = 0; i < instances(); ++i) {
    for (uint32_t k = 0; k < n_const; ++k) in.set(k, inst_const[i].get(k));
    for (size_t k = 0; k < inst_wit[i].size(); ++k)
      in.set(n_const + k, w.get(inst_wit[i][k]));
    if (!tmpl.eval(in).get(0)) return false;
  }
  return true;
}

ZkStatement ZkStatement::from_circuit(BooleanCircuit c, std::string kind) {
  ZkStatement s;
  s.witness_len = c.n_inputs;
  s.inst_const = {BitString(0)};
  s.inst_wit.emplace_back();
  for (uint32_t i = 0; i < c.n_inputs; ++i) s.inst_wit[0].push_back(i);
  s.tmpl = std::move(c);
  s.kind = std::move(kind);
  s.validate();
  return s;
}

//===----------------------------------------------------------------------===//
// Internal machinery
//===----------------------------------------------------------------------===//

namespace {

// A committed view grows per instance; beyond this size the commitment
// covers a digest of the view instead of its literal bits.
constexpr size_t kLiteralLimit = 16384;

uint64_t lane_mask(size_t lanes) {
  return lanes == 64 ? ~0ull : (1ull << lanes) - 1;
}

// Per-(party, round) randomness is expanded from one u64 seed: a dedicated
// stream for the witness share and one stream per instance for AND tapes.
FastXof wshare_stream(uint64_t seed) { return FastXof(mix64(seed) ^ mix64(~0ull)); }
FastXof tape_stream(uint64_t seed, size_t inst) {
  return FastXof(mix64(seed) ^ mix64(uint64_t(inst)));
}

BitString bs_xor(const BitString& a, const BitString& b) {
  if (a.size() != b.size()) throw UsageError("xor length mismatch");
  BitString out = a;
  auto ow = out.words_mut();
  auto bw = b.words();
  for (size_t i = 0; i < ow.size(); ++i) ow[i] ^= bw[i];
  return out;
}

BitString bs_not(const BitString& a) {
  BitString out = a;
  auto ow = out.words_mut();
  for (size_t i = 0; i < ow.size(); ++i) ow[i] = ~ow[i];
  out.mask_tail();
  return out;
}

/// rows[r] (nbits each, r a lane) -> per-position words whose bit r is
/// rows[r]'s bit.
void rows_to_words(std::span<const BitString> rows, size_t nbits, std::vector<uint64_t>& out) {
  out.assign(nbits, 0);
  uint64_t m[64];
  for (size_t base = 0; base < nbits; base += 64) {
    unsigned width = unsigned(std::min<size_t>(64, nbits - base));
    for (size_t r = 0; r < 64; ++r)
      m[r] = r < rows.size() ? rows[r].words()[base / 64] : 0;
    transpose64(m);
    for (unsigned j = 0; j < width; ++j) out[base + j] = m[j];
  }
}

/// Inverse direction: per-position words -> one row per lane.
void words_to_rows(std::span<const uint64_t> words, size_t lanes, size_t nbits,
                   std::vector<BitString>& rows) {
  rows.assign(lanes, BitString(nbits));
  uint64_t m[64];
  for (size_t base = 0; base < nbits; base += 64) {
    unsigned width = unsigned(std::min<size_t>(64, nbits - base));
    for (unsigned j = 0; j < 64; ++j) m[j] = j < width ? words[base + j] : 0;
    transpose64(m);
    for (size_t r = 0; r < lanes; ++r) rows[r].words_mut()[base / 64] = m[r];
  }
}

struct Shape {
  size_t n_inst = 0;
  size_t and_count = 0;
  size_t chunk = 0; // serialized tape/z bytes per instance
  size_t wbytes = 0;
  size_t view_bits = 0;
  bool use_digest = false;
  size_t msg_bits = 0; // committed message length
};

Shape shape_of(const ZkStatement& stmt) {
  Shape sh;
  sh.n_inst = stmt.instances();
  sh.and_count = stmt.tmpl.and_count();
  sh.chunk = (sh.and_count + 7) / 8;
  sh.wbytes = (stmt.witness_len + 7) / 8;
  sh.view_bits = 8 * (sh.wbytes + sh.n_inst * 2 * sh.chunk);
  sh.use_digest = sh.view_bits > kLiteralLimit;
  sh.msg_bits = sh.use_digest ? 128 : sh.view_bits;
  return sh;
}

/// Accumulates one view's serialized bytes, literally or as a digest.
struct ViewSink {
  bool use_digest;
  std::optional<Sha256Stream> sha;
  std::vector<uint8_t> raw;

  explicit ViewSink(bool digest) : use_digest(digest) {
    if (digest) sha.emplace();
  }
  void absorb(std::span<const uint8_t> b) {
    if (use_digest)
      sha->absorb(b);
    else
      raw.insert(raw.end(), b.begin(), b.end());
  }
  BitString message() {
    return use_digest ? sha->final128()
                      : BitString::from_bytes(raw, raw.size() * 8);
  }
};

void check_params(const ZkStatement& stmt, const ZkParams& params) {
  stmt.validate();
  CfPrg::check_lambda(params.lambda);
  if (params.rounds == 0 || params.rounds > 64)
    throw UsageError("rounds must be in [1, 64]");
}

void load_const_input(uint64_t* w0, uint64_t* w1, uint64_t* w2, bool bit, uint64_t mask) {
  *w0 = bit ? mask : 0;
  *w1 = 0;
  *w2 = 0;
}

struct CheatPlan {
  std::vector<int> broken; // per round: the party whose pair check fails
};

//===----------------------------------------------------------------------===//
// Prover
//===----------------------------------------------------------------------===//

void prove_core(Conn& conn, const ZkStatement& stmt, const BitString& witness,
                const ZkParams& params, Rng& rng, const CheatPlan* cheat) {
  check_params(stmt, params);
  if (witness.size() != stmt.witness_len) throw UsageError("witness length mismatch");

  BitString rho = params.rho;
  if (rho.size() == 0) {
    auto payload = conn.recv_kind(FrameKind::Classical);
    ByteReader rd(payload);
    rho = rd.bits();
    rd.finish();
  }
  if (rho.size() != 3 * params.lambda) throw ProtocolError("bad commitment coin length");

  const Shape sh = shape_of(stmt);
  const size_t t = params.rounds;
  const uint64_t mask = lane_mask(t);
  const auto& tmpl = stmt.tmpl;

  std::vector<uint64_t> seeds[3];
  std::vector<BitString> masters[3];
  for (int p = 0; p < 3; ++p)
    for (size_t r = 0; r < t; ++r) seeds[p].push_back(rng.u64());
  for (int p = 0; p < 3; ++p)
    for (size_t r = 0; r < t; ++r) masters[p].push_back(rng.bits(params.lambda));

  // Witness shares: parties 0 and 1 draw theirs from their seeds, party 2
  // completes the sum and its rows travel explicitly when opened.
  std::vector<BitString> wrows[3];
  for (size_t r = 0; r < t; ++r) {
    wrows[0].push_back(wshare_stream(seeds[0][r]).bits(stmt.witness_len));
    wrows[1].push_back(wshare_stream(seeds[1][r]).bits(stmt.witness_len));
    wrows[2].push_back(bs_xor(bs_xor(wrows[0][r], wrows[1][r]), witness));
  }
  std::vector<uint64_t> ws[3];
  for (int p = 0; p < 3; ++p) rows_to_words(wrows[p], stmt.witness_len, ws[p]);

  std::vector<ViewSink> sinks[3];
  std::vector<std::vector<uint8_t>> zrows[3];
  for (int p = 0; p < 3; ++p) {
    for (size_t r = 0; r < t; ++r) {
      sinks[p].emplace_back(sh.use_digest);
      sinks[p][r].absorb(wrows[p][r].bytes());
      zrows[p].emplace_back();
      zrows[p][r].reserve(sh.n_inst * sh.chunk);
    }
  }

  // Cheating setup: one broken pair per round.  If the output wire is a
  // terminal AND gate the flip lives inside the broken party's committed
  // view (caught only when that party's pair relation is rechecked); the
  // fallback lies in the broadcast instead.
  uint64_t flipmask[3] = {0, 0, 0};
  bool via_z = false;
  size_t gout_ai = 0;
  if (cheat) {
    for (size_t r = 0; r < t; ++r) flipmask[cheat->broken[r]] |= 1ull << r;
    uint32_t outw = tmpl.outputs[0];
    if (outw >= tmpl.n_inputs && tmpl.gates[outw - tmpl.n_inputs].op == Op::AND) {
      bool consumed = false;
      for (const auto& g : tmpl.gates) {
        if (g.op == Op::CONST) continue;
        if (g.a == outw || (g.op != Op::NOT && g.b == outw)) consumed = true;
      }
      if (!consumed) {
        via_z = true;
        size_t ai = 0;
        for (uint32_t gi = 0; gi + tmpl.n_inputs < outw; ++gi)
          ai += (tmpl.gates[gi].op == Op::AND);
        gout_ai = ai;
      }
    }
  }

  std::vector<uint64_t> W[3], tw[3], zw[3];
  for (int p = 0; p < 3; ++p) {
    W[p].resize(tmpl.n_wires());
    tw[p].resize(sh.and_count);
    zw[p].resize(sh.and_count);
  }
  std::vector<BitString> trows(t), zr;
  std::vector<uint64_t> ow[3], osum;

  for (size_t inst = 0; inst < sh.n_inst; ++inst) {
    for (int p = 0; p < 3; ++p) {
      for (size_t r = 0; r < t; ++r) {
        trows[r] = tape_stream(seeds[p][r], inst).bits(sh.and_count);
        sinks[p][r].absorb(trows[r].bytes());
      }
      rows_to_words(trows, sh.and_count, tw[p]);
    }

    for (uint32_t k = 0; k < tmpl.n_inputs; ++k) {
      if (k < stmt.n_const) {
        load_const_input(&W[0][k], &W[1][k], &W[2][k], stmt.inst_const[inst].get(k), mask);
      } else {
        uint32_t idx = stmt.inst_wit[inst][k - stmt.n_const];
        for (int p = 0; p < 3; ++p) W[p][k] = ws[p][idx];
      }
    }

    size_t ai = 0;
    for (size_t gi = 0; gi < tmpl.gates.size(); ++gi) {
      const Gate& g = tmpl.gates[gi];
      size_t w = tmpl.n_inputs + gi;
      switch (g.op) {
      case Op::XOR:
        for (int p = 0; p < 3; ++p) W[p][w] = W[p][g.a] ^ W[p][g.b];
        break;
      case Op::NOT:
        W[0][w] = W[0][g.a] ^ mask;
        W[1][w] = W[1][g.a];
        W[2][w] = W[2][g.a];
        break;
      case Op::CONST:
        load_const_input(&W[0][w], &W[1][w], &W[2][w], g.a != 0, mask);
        break;
      case Op::AND: {
        uint64_t z[3];
        for (int p = 0; p < 3; ++p) {
          int q = (p + 1) % 3;
          z[p] = (W[p][g.a] & W[p][g.b]) ^ (W[q][g.a] & W[p][g.b]) ^
                 (W[p][g.a] & W[q][g.b]) ^ tw[p][ai] ^ tw[q][ai];
        }
        if (cheat && via_z && ai == gout_ai) {
          uint64_t sum = z[0] ^ z[1] ^ z[2];
          for (int p = 0; p < 3; ++p) z[p] ^= flipmask[p] & ~sum & mask;
        }
        for (int p = 0; p < 3; ++p) {
          zw[p][ai] = z[p];
          W[p][w] = z[p];
        }
        ++ai;
        break;
      }
      }
    }

    for (int p = 0; p < 3; ++p) {
      words_to_rows(zw[p], t, sh.and_count, zr);
      for (size_t r = 0; r < t; ++r) {
        auto bytes = zr[r].bytes();
        zrows[p][r].insert(zrows[p][r].end(), bytes.begin(), bytes.end());
        sinks[p][r].absorb(bytes);
      }
    }

    uint32_t outw = tmpl.outputs[0];
    for (int p = 0; p < 3; ++p) ow[p].push_back(W[p][outw]);
    if (cheat && !via_z) osum.push_back(W[0][outw] ^ W[1][outw] ^ W[2][outw]);
  }

  std::vector<BitString> bcrows[3];
  for (int p = 0; p < 3; ++p) words_to_rows(ow[p], t, sh.n_inst, bcrows[p]);
  if (cheat && !via_z) {
    std::vector<BitString> srows;
    words_to_rows(osum, t, sh.n_inst, srows);
    for (size_t r = 0; r < t; ++r)
      bcrows[cheat->broken[r]][r] =
          bs_xor(bcrows[cheat->broken[r]][r], bs_not(srows[r]));
  }

  std::vector<BitString> commits[3];
  for (int p = 0; p < 3; ++p)
    for (size_t r = 0; r < t; ++r)
      commits[p].push_back(naor_commit_str(rho, sinks[p][r].message(), masters[p][r]));

  for (size_t r = 0; r < t; ++r) {
    ByteWriter cm;
    for (int p = 0; p < 3; ++p) cm.bits(commits[p][r]);
    for (int p = 0; p < 3; ++p) cm.bits(bcrows[p][r]);
    conn.send(FrameKind::Classical, cm.take());

    auto ch = conn.recv_kind(FrameKind::Classical);
    if (ch.size() != 1 || ch[0] > 2) throw ProtocolError("bad challenge");
    int e = ch[0];
    int e1 = (e + 1) % 3;

    ByteWriter om;
    om.u64(seeds[e][r]);
    om.u64(seeds[e1][r]);
    om.bits(masters[e][r]);
    om.bits(masters[e1][r]);
    if (e != 0) om.bits(wrows[2][r]); // party 2 is among the opened pair
    om.u32(uint32_t(zrows[e1][r].size()));
    om.bytes(zrows[e1][r]);
    conn.send(FrameKind::Classical, om.take());
  }
}

//===----------------------------------------------------------------------===//
// Pair recomputation, shared by the verifier and the simulator.
//===----------------------------------------------------------------------===//

struct PairOut {
  std::vector<BitString> msg_u, msg_v; // committed message per lane
  std::vector<BitString> bc_u, bc_v;   // derived broadcast rows per lane
};

PairOut pair_sweep(const ZkStatement& stmt, const Shape& sh, int u, int v,
                   std::span<const uint64_t> seed_u, std::span<const uint64_t> seed_v,
                   std::span<const BitString> wrow_u, std::span<const BitString> wrow_v,
                   std::span<const std::vector<uint8_t>> zrow_v) {
  const size_t L = seed_u.size();
  const uint64_t mask = lane_mask(L);
  const auto& tmpl = stmt.tmpl;

  std::vector<ViewSink> su, sv;
  for (size_t l = 0; l < L; ++l) {
    su.emplace_back(sh.use_digest);
    su[l].absorb(wrow_u[l].bytes());
    sv.emplace_back(sh.use_digest);
    sv[l].absorb(wrow_v[l].bytes());
  }

  std::vector<uint64_t> wsu, wsv;
  rows_to_words(wrow_u, stmt.witness_len, wsu);
  rows_to_words(wrow_v, stmt.witness_len, wsv);

  std::vector<uint64_t> Wu(tmpl.n_wires()), Wv(tmpl.n_wires());
  std::vector<uint64_t> twu(sh.and_count), twv(sh.and_count), zwu(sh.and_count),
      zwv(sh.and_count);
  std::vector<BitString> trows(L), zvrows(L), zr;
  std::vector<uint64_t> owu, owv;

  for (size_t inst = 0; inst < sh.n_inst; ++inst) {
    for (size_t l = 0; l < L; ++l) {
      trows[l] = tape_stream(seed_u[l], inst).bits(sh.and_count);
      su[l].absorb(trows[l].bytes());
    }
    rows_to_words(trows, sh.and_count, twu);
    for (size_t l = 0; l < L; ++l) {
      trows[l] = tape_stream(seed_v[l], inst).bits(sh.and_count);
      sv[l].absorb(trows[l].bytes());
    }
    rows_to_words(trows, sh.and_count, twv);

    for (size_t l = 0; l < L; ++l) {
      auto chunk = std::span(zrow_v[l]).subspan(inst * sh.chunk, sh.chunk);
      zvrows[l] = BitString::from_bytes(chunk, sh.and_count);
    }
    rows_to_words(zvrows, sh.and_count, zwv);

    for (uint32_t k = 0; k < tmpl.n_inputs; ++k) {
      if (k < stmt.n_const) {
        bool bit = stmt.inst_const[inst].get(k);
        Wu[k] = (u == 0 && bit) ? mask : 0;
        Wv[k] = (v == 0 && bit) ? mask : 0;
      } else {
        uint32_t idx = stmt.inst_wit[inst][k - stmt.n_const];
        Wu[k] = wsu[idx];
        Wv[k] = wsv[idx];
      }
    }

    size_t ai = 0;
    for (size_t gi = 0; gi < tmpl.gates.size(); ++gi) {
      const Gate& g = tmpl.gates[gi];
      size_t w = tmpl.n_inputs + gi;
      switch (g.op) {
      case Op::XOR:
        Wu[w] = Wu[g.a] ^ Wu[g.b];
        Wv[w] = Wv[g.a] ^ Wv[g.b];
        break;
      case Op::NOT:
        Wu[w] = Wu[g.a] ^ (u == 0 ? mask : 0);
        Wv[w] = Wv[g.a] ^ (v == 0 ? mask : 0);
        break;
      case Op::CONST:
        Wu[w] = (u == 0 && g.a) ? mask : 0;
        Wv[w] = (v == 0 && g.a) ? mask : 0;
        break;
      case Op::AND:
        // The first opened party's AND outputs are defined by the pair
        // relation; the second's arrive with the opening.
        zwu[ai] = (Wu[g.a] & Wu[g.b]) ^ (Wv[g.a] & Wu[g.b]) ^ (Wu[g.a] & Wv[g.b]) ^
                  twu[ai] ^ twv[ai];
        Wu[w] = zwu[ai];
        Wv[w] = zwv[ai];
        ++ai;
        break;
      }
    }

    words_to_rows(zwu, L, sh.and_count, zr);
    for (size_t l = 0; l < L; ++l) {
      su[l].absorb(zr[l].bytes());
      auto chunk = std::span(zrow_v[l]).subspan(inst * sh.chunk, sh.chunk);
      sv[l].absorb(chunk);
    }

    uint32_t outw = tmpl.outputs[0];
    owu.push_back(Wu[outw]);
    owv.push_back(Wv[outw]);
  }

  PairOut out;
  for (size_t l = 0; l < L; ++l) {
    out.msg_u.push_back(su[l].message());
    out.msg_v.push_back(sv[l].message());
  }
  words_to_rows(owu, L, sh.n_inst, out.bc_u);
  words_to_rows(owv, L, sh.n_inst, out.bc_v);
  return out;
}

//===----------------------------------------------------------------------===//
// Verifier
//===----------------------------------------------------------------------===//

struct OpenMsg {
  uint64_t seed_u = 0, seed_v = 0;
  BitString master_u, master_v;
  BitString w2row;
  std::vector<uint8_t> zrow;
};

bool verify_core(Conn& conn, const ZkStatement& stmt, const ZkParams& params,
                 const BitString& rho, const std::function<int(size_t)>& next_challenge) {
  const Shape sh = shape_of(stmt);
  const size_t t = params.rounds;

  std::vector<std::array<BitString, 3>> commits(t), bcasts(t);
  std::vector<int> chal(t);
  std::vector<OpenMsg> opens(t);

  for (size_t r = 0; r < t; ++r) {
    auto cpayload = conn.recv_kind(FrameKind::Classical);
    ByteReader cm(cpayload);
    for (int p = 0; p < 3; ++p) {
      commits[r][p] = cm.bits();
      if (commits[r][p].size() != sh.msg_bits * 3 * params.lambda) return false;
    }
    for (int p = 0; p < 3; ++p) {
      bcasts[r][p] = cm.bits();
      if (bcasts[r][p].size() != sh.n_inst) return false;
    }
    cm.finish();

    int e = next_challenge(r);
    if (e < 0 || e > 2) return false;
    chal[r] = e;
    conn.send(FrameKind::Classical, {uint8_t(e)});

    auto opayload = conn.recv_kind(FrameKind::Classical);
    ByteReader om(opayload);
    OpenMsg& o = opens[r];
    o.seed_u = om.u64();
    o.seed_v = om.u64();
    o.master_u = om.bits();
    o.master_v = om.bits();
    if (o.master_u.size() != params.lambda || o.master_v.size() != params.lambda)
      return false;
    if (e != 0) {
      o.w2row = om.bits();
      if (o.w2row.size() != stmt.witness_len) return false;
    }
    uint32_t zlen = om.u32();
    if (zlen != sh.n_inst * sh.chunk) return false;
    om.need(zlen);
    auto sp = std::span(om.buf).subspan(om.off, zlen);
    o.zrow.assign(sp.begin(), sp.end());
    om.off += zlen;
    om.finish();
  }

  BitString ones = BitString::ones(sh.n_inst);
  for (size_t r = 0; r < t; ++r)
    if (bs_xor(bs_xor(bcasts[r][0], bcasts[r][1]), bcasts[r][2]) != ones) return false;

  for (int c = 0; c < 3; ++c) {
    std::vector<size_t> R;
    for (size_t r = 0; r < t; ++r)
      if (chal[r] == c) R.push_back(r);
    if (R.empty()) continue;

    int u = c, v = (c + 1) % 3;
    std::vector<uint64_t> seed_u, seed_v;
    std::vector<BitString> wrow_u, wrow_v;
    std::vector<std::vector<uint8_t>> zrow_v;
    for (size_t r : R) {
      const OpenMsg& o = opens[r];
      seed_u.push_back(o.seed_u);
      seed_v.push_back(o.seed_v);
      wrow_u.push_back(u == 2 ? o.w2row : wshare_stream(o.seed_u).bits(stmt.witness_len));
      wrow_v.push_back(v == 2 ? o.w2row : wshare_stream(o.seed_v).bits(stmt.witness_len));
      zrow_v.push_back(o.zrow);
    }

    PairOut po = pair_sweep(stmt, sh, u, v, seed_u, seed_v, wrow_u, wrow_v, zrow_v);

    for (size_t l = 0; l < R.size(); ++l) {
      size_t r = R[l];
      if (naor_commit_str(rho, po.msg_u[l], opens[r].master_u) != commits[r][u]) return false;
      if (naor_commit_str(rho, po.msg_v[l], opens[r].master_v) != commits[r][v]) return false;
      if (po.bc_u[l] != bcasts[r][u]) return false;
      if (po.bc_v[l] != bcasts[r][v]) return false;
    }
  }
  return true;
}

} // namespace

//===----------------------------------------------------------------------===//
// Public entry points
//===----------------------------------------------------------------------===//

void zk_prove(Conn& c, const ZkStatement& stmt, const BitString& witness,
              const ZkParams& params, Rng& rng) {
  prove_core(c, stmt, witness, params, rng, nullptr);
}

void zk_prove_cheating(Conn& c, const ZkStatement& stmt, const ZkParams& params, Rng& rng) {
  CheatPlan plan;
  for (size_t r = 0; r < params.rounds; ++r) plan.broken.push_back(int(rng.below(3)));
  prove_core(c, stmt, BitString(stmt.witness_len), params, rng, &plan);
}

bool zk_verify(Conn& c, const ZkStatement& stmt, const ZkParams& params, Rng& rng) {
  check_params(stmt, params);
  BitString rho = params.rho;
  if (rho.size() == 0) {
    rho = rng.bits(3 * params.lambda);
    ByteWriter w;
    w.bits(rho);
    c.send(FrameKind::Classical, w.take());
  }
  if (rho.size() != 3 * params.lambda) throw UsageError("bad rho length");
  try {
    return verify_core(c, stmt, params, rho,
                       [&rng](size_t) { return int(rng.below(3)); });
  } catch (const QotError&) {
    return false; // malformed transcript or dead transport
  }
}

SimResult zk_simulate(const ZkStatement& stmt, const ZkParams& params,
                      const VerifierHook& hook, Rng& rng) {
  check_params(stmt, params);
  if (params.rho.size() != 3 * params.lambda)
    throw UsageError("zk_simulate needs params.rho");
  const Shape sh = shape_of(stmt);
  const size_t t = params.rounds;

  SimResult res;
  uint32_t pseq = 0;
  auto emit = [&](uint8_t from, uint32_t seq, std::vector<uint8_t> payload) {
    Frame f;
    f.seq = seq;
    f.payload = std::move(payload);
    res.transcript.push_back({from, std::move(f)});
  };

  for (size_t r = 0; r < t; ++r) {
    bool done = false;
    for (int attempt = 0; attempt < 64 && !done; ++attempt) {
      int u = int(rng.below(3));
      int v = (u + 1) % 3;
      uint64_t seed_u = rng.u64(), seed_v = rng.u64();
      BitString master_u = rng.bits(params.lambda);
      BitString master_v = rng.bits(params.lambda);
      BitString master_3 = rng.bits(params.lambda);

      // Party 2's input share and the second party's AND outputs are
      // uniform in a real execution; sample them directly.
      BitString w2row = rng.bits(stmt.witness_len);
      std::vector<uint8_t> zrow;
      zrow.reserve(sh.n_inst * sh.chunk);
      for (size_t inst = 0; inst < sh.n_inst; ++inst) {
        auto bytes = rng.bits(sh.and_count).bytes();
        zrow.insert(zrow.end(), bytes.begin(), bytes.end());
      }

      BitString wrow_u = u == 2 ? w2row : wshare_stream(seed_u).bits(stmt.witness_len);
      BitString wrow_v = v == 2 ? w2row : wshare_stream(seed_v).bits(stmt.witness_len);

      PairOut po = pair_sweep(stmt, sh, u, v, std::span(&seed_u, 1), std::span(&seed_v, 1),
                              std::span(&wrow_u, 1), std::span(&wrow_v, 1),
                              std::span(&zrow, 1));

      std::array<BitString, 3> commits, bcasts;
      commits[u] = naor_commit_str(params.rho, po.msg_u[0], master_u);
      commits[v] = naor_commit_str(params.rho, po.msg_v[0], master_v);
      commits[3 - u - v] = naor_commit_str(params.rho, rng.bits(sh.msg_bits), master_3);
      bcasts[u] = po.bc_u[0];
      bcasts[v] = po.bc_v[0];
      bcasts[3 - u - v] = bs_not(bs_xor(po.bc_u[0], po.bc_v[0])); // forces sum = 1
      ByteWriter cm;
      for (int p = 0; p < 3; ++p) cm.bits(commits[p]);
      for (int p = 0; p < 3; ++p) cm.bits(bcasts[p]);
      auto commit_payload = cm.take();

      ++res.hook_calls;
      int got = hook(r, commit_payload);
      if (got != u) continue;

      emit(0, pseq++, commit_payload);
      emit(1, uint32_t(r), {uint8_t(got)});
      ByteWriter om;
      om.u64(seed_u);
      om.u64(seed_v);
      om.bits(master_u);
      om.bits(master_v);
      if (u != 0) om.bits(w2row);
      om.u32(uint32_t(zrow.size()));
      om.bytes(zrow);
      emit(0, pseq++, om.take());
      done = true;
    }
    if (!done) throw QotError("simulation failure: hook refused every challenge");
  }
  return res;
}

bool zk_transcript_accepts(const ZkStatement& stmt, const ZkParams& params,
                           const std::vector<TranscriptEntry>& transcript) {
  check_params(stmt, params);
  if (params.rho.size() != 3 * params.lambda)
    throw UsageError("zk_transcript_accepts needs params.rho");
  std::vector<Frame> prover;
  std::vector<int> challenges;
  uint64_t session = transcript.empty() ? 0 : transcript[0].frame.session_id;
  for (const auto& e : transcript) {
    if (e.from == 0) {
      Frame f = e.frame;
      f.session_id = session;
      prover.push_back(std::move(f));
    } else if (e.frame.payload.size() == 1) {
      challenges.push_back(e.frame.payload[0]);
    }
  }
  ReplayConn conn(session, 1, std::move(prover));
  try {
    return verify_core(conn, stmt, params, params.rho, [&](size_t r) -> int {
      return r < challenges.size() ? challenges[r] : -1;
    });
  } catch (const std::exception&) {
    return false;
  }
}

//===----------------------------------------------------------------------===//
// Statement compilers
//===----------------------------------------------------------------------===//

ZkStatement stmt_commit_opens_to(const BitString& rho, const BitString& c, bool m,
                                 unsigned lambda) {
  CfPrg::check_lambda(lambda);
  if (rho.size() != 3 * lambda || c.size() != 3 * lambda)
    throw UsageError("rho/commitment length mismatch");
  CircuitBuilder b(lambda);
  auto seed = b.inputs(0, lambda);
  auto blk = CfPrg::append_block(b, seed, 0);
  b.output(b.eq_const(blk, m ? bs_xor(c, rho) : c));
  ZkStatement s = ZkStatement::from_circuit(b.take(), "commit-opens-to");
  return s;
}

ZkStatement stmt_socom_consistency(const BitString& rho, const std::vector<BitString>& cs,
                                   const std::vector<uint32_t>& open_idx,
                                   const std::vector<BitString>& opened_msgs,
                                   unsigned lambda, uint32_t msg_len) {
  CfPrg::check_lambda(lambda);
  if (rho.size() != 3 * lambda) throw UsageError("rho length mismatch");
  if (cs.empty()) throw UsageError("no commitments");
  if (open_idx.size() != opened_msgs.size()) throw UsageError("opened set size mismatch");
  const size_t k = cs.size();
  for (const auto& c : cs)
    if (c.size() != size_t(msg_len) * 3 * lambda) throw UsageError("commitment length mismatch");
  for (const auto& m : opened_msgs)
    if (m.size() != msg_len) throw UsageError("opened message length mismatch");
  for (uint32_t i : open_idx)
    if (i >= k) throw UsageError("opened index out of range");

  // Template: constants are (commitment bits, opened?, pinned message);
  // witness slice is (master, message).
  const uint32_t n_const = msg_len * 3 * lambda + 1 + msg_len;
  const uint32_t n_wit = lambda + msg_len;
  CircuitBuilder b(n_const + n_wit);
  auto cw = b.inputs(0, msg_len * 3 * lambda);
  auto known = b.input(msg_len * 3 * lambda);
  auto mpub = b.inputs(msg_len * 3 * lambda + 1, msg_len);
  auto master = b.inputs(n_const, lambda);
  auto msg = b.inputs(n_const + lambda, msg_len);

  std::vector<CircuitBuilder::W> checks;
  for (uint32_t j = 0; j < msg_len; ++j) {
    auto pad = CfPrg::append_block(b, master, j);
    for (uint32_t bb = 0; bb < 3 * lambda; ++bb) {
      auto val = rho.get(bb) ? b.xor_(pad[bb], msg[j]) : pad[bb];
      checks.push_back(b.xnor(val, cw[size_t(j) * 3 * lambda + bb]));
    }
    checks.push_back(b.not_(b.and_(known, b.xor_(msg[j], mpub[j]))));
  }
  b.output(b.and_reduce(checks));

  ZkStatement s;
  s.tmpl = b.take();
  s.n_const = n_const;
  s.witness_len = k * (lambda + msg_len);
  s.kind = "socom-consistency";
  for (size_t i = 0; i < k; ++i) {
    auto it = std::find(open_idx.begin(), open_idx.end(), uint32_t(i));
    bool opened = it != open_idx.end();
    BitString cb;
    cb.append(cs[i]);
    cb.append(opened);
    cb.append(opened ? opened_msgs[size_t(it - open_idx.begin())] : BitString(msg_len));
    s.inst_const.push_back(std::move(cb));
    std::vector<uint32_t> wit;
    for (uint32_t j = 0; j < lambda; ++j) wit.push_back(uint32_t(i) * lambda + j);
    for (uint32_t j = 0; j < msg_len; ++j)
      wit.push_back(uint32_t(k) * lambda + uint32_t(i) * msg_len + j);
    s.inst_wit.push_back(std::move(wit));
  }
  s.validate();
  return s;
}

BitString socom_witness(const std::vector<BitString>& masters,
                        const std::vector<BitString>& msgs, unsigned lambda,
                        uint32_t msg_len) {
  if (masters.size() != msgs.size()) throw UsageError("masters/messages size mismatch");
  BitString w;
  for (const auto& m : masters) {
    if (m.size() != lambda) throw UsageError("master length mismatch");
    w.append(m);
  }
  for (const auto& m : msgs) {
    if (m.size() != msg_len) throw UsageError("message length mismatch");
    w.append(m);
  }
  return w;
}

} // namespace qot

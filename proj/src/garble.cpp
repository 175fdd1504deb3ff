#include "qot/garble.hpp"

namespace qot {

namespace {

constexpr unsigned kTableRows[4] = {4, 4, 2, 1}; // XOR, AND, NOT, CONST

size_t row_bits(unsigned lambda, Op op) {
  return op == Op::CONST ? lambda + 1 : 4 * size_t(lambda) + 1;
}

/// One row's PRG mask: two blocks keyed by the row key.
BitString row_mask(const BitString& key, uint32_t gi, unsigned r, unsigned lambda) {
  BitString m = CfPrg::block(key, garble_row_ctr(gi, r));
  m.append(CfPrg::block(key, garble_row_ctr(gi, r) + 1));
  return m.substr(0, 4 * size_t(lambda) + 1);
}

BitString pack_label(const BitString& label, bool select, unsigned lambda, bool tagged) {
  BitString out = label;
  out.append(select);
  if (tagged) out.append(BitString(3 * size_t(lambda))); // zero tag
  return out;
}

void check_size(const BooleanCircuit& c, unsigned lambda) {
  uint64_t budget = lambda >= 16 ? (1ull << 32) : (1ull << (2 * lambda));
  if (c.n_wires() > budget || 8 * uint64_t(c.gates.size()) > budget)
    throw UsageError("circuit too large for the garbling counter space");
}

struct WirePair {
  BitString l[2];
  bool perm;
};

WirePair derive_wire(const BitString& seed, uint32_t w, unsigned lambda) {
  BitString blk = CfPrg::block(seed, w);
  WirePair p;
  p.l[0] = blk.substr(0, lambda);
  BitString diff = blk.substr(lambda, lambda);
  diff.set(0, true); // labels of a wire always differ, so decoding is exact
  p.l[1] = p.l[0] ^ diff;
  p.perm = blk.get(2 * size_t(lambda));
  return p;
}

} // namespace

BitString GarbledCircuit::payload_bits() const {
  BitString out;
  for (const auto& rows : table)
    for (const auto& r : rows) out.append(r);
  for (const auto& d : decode) {
    out.append(d[0]);
    out.append(d[1]);
  }
  return out;
}

std::vector<uint8_t> GarbledCircuit::serialize() const {
  ByteWriter w;
  w.u32(lambda);
  auto tb = topo.serialize();
  w.u32(uint32_t(tb.size()));
  w.bytes(tb);
  w.bits(payload_bits());
  return w.take();
}

GarbledCircuit GarbledCircuit::deserialize(std::span<const uint8_t> in) {
  ByteReader rd(in);
  GarbledCircuit g;
  g.lambda = rd.u32();
  CfPrg::check_lambda(g.lambda);
  uint32_t tlen = rd.u32();
  rd.need(tlen);
  g.topo = BooleanCircuit::deserialize(in.subspan(rd.off, tlen));
  rd.off += tlen;
  BitString payload = rd.bits();
  rd.finish();

  size_t pos = 0;
  for (size_t gi = 0; gi < g.topo.gates.size(); ++gi) {
    Op op = g.topo.gates[gi].op;
    std::vector<BitString> rows;
    for (unsigned r = 0; r < kTableRows[unsigned(op)]; ++r) {
      size_t n = row_bits(g.lambda, op);
      if (pos + n > payload.size()) throw QotError("garbled payload truncated");
      rows.push_back(payload.substr(pos, n));
      pos += n;
    }
    g.table.push_back(std::move(rows));
  }
  for (size_t i = 0; i < g.topo.outputs.size(); ++i) {
    if (pos + 2 * size_t(g.lambda) > payload.size())
      throw QotError("garbled payload truncated");
    std::array<BitString, 2> d;
    d[0] = payload.substr(pos, g.lambda);
    d[1] = payload.substr(pos + g.lambda, g.lambda);
    pos += 2 * size_t(g.lambda);
    g.decode.push_back(std::move(d));
  }
  if (pos != payload.size()) throw QotError("garbled payload has trailing bits");
  return g;
}

std::pair<GarbledCircuit, WireLabels> garb(const BooleanCircuit& c, const BitString& seed) {
  c.validate();
  unsigned lambda = unsigned(seed.size());
  CfPrg::check_lambda(lambda);
  check_size(c, lambda);

  std::vector<WirePair> wires;
  wires.reserve(c.n_wires());
  for (uint32_t w = 0; w < c.n_wires(); ++w) wires.push_back(derive_wire(seed, w, lambda));

  GarbledCircuit g;
  g.lambda = lambda;
  g.topo = c;
  for (size_t gi = 0; gi < c.gates.size(); ++gi) {
    const Gate& gt = c.gates[gi];
    const WirePair& out = wires[c.n_inputs + gi];
    std::vector<BitString> rows;
    switch (gt.op) {
    case Op::XOR:
    case Op::AND: {
      const WirePair& a = wires[gt.a];
      const WirePair& b = wires[gt.b];
      for (unsigned r = 0; r < 4; ++r) {
        bool sa = r >> 1, sb = r & 1;
        bool va = sa ^ a.perm, vb = sb ^ b.perm;
        bool vo = gt.op == Op::AND ? (va && vb) : (va != vb);
        // Same-wire operands would cancel in the XOR key; key by the label
        // itself so a flipped select bit still derails the mask.
        BitString key = gt.a == gt.b ? a.l[va] : a.l[va] ^ b.l[vb];
        BitString plain = pack_label(out.l[vo], vo ^ out.perm, lambda, true);
        rows.push_back(plain ^ row_mask(key, uint32_t(gi), r, lambda));
      }
      break;
    }
    case Op::NOT: {
      const WirePair& a = wires[gt.a];
      for (unsigned r = 0; r < 2; ++r) {
        bool va = bool(r) ^ a.perm;
        bool vo = !va;
        BitString plain = pack_label(out.l[vo], vo ^ out.perm, lambda, true);
        rows.push_back(plain ^ row_mask(a.l[va], uint32_t(gi), r, lambda));
      }
      break;
    }
    case Op::CONST: {
      bool v = gt.a != 0;
      rows.push_back(pack_label(out.l[v], v ^ out.perm, lambda, false));
      break;
    }
    }
    g.table.push_back(std::move(rows));
  }
  for (uint32_t ow : c.outputs) g.decode.push_back({wires[ow].l[0], wires[ow].l[1]});

  WireLabels e;
  e.lambda = lambda;
  for (uint32_t w = 0; w < c.n_inputs; ++w) {
    e.label.push_back({wires[w].l[0], wires[w].l[1]});
    e.perm.push_back(wires[w].perm);
  }
  return {std::move(g), std::move(e)};
}

BitString enc(const WireLabels& e, const BitString& x) {
  if (x.size() != e.label.size()) throw UsageError("enc: input length mismatch");
  BitString out;
  for (size_t i = 0; i < x.size(); ++i) {
    bool v = x.get(i);
    out.append(e.label[i][v]);
    out.append(v ^ bool(e.perm[i]));
  }
  return out;
}

BitString geval(const GarbledCircuit& g, const BitString& xhat) {
  const BooleanCircuit& c = g.topo;
  const unsigned lambda = g.lambda;
  if (xhat.size() != size_t(c.n_inputs) * (lambda + 1))
    throw UsageError("geval: encoded input length mismatch");
  if (g.table.size() != c.gates.size() || g.decode.size() != c.outputs.size())
    throw UsageError("geval: malformed garbled circuit");

  std::vector<BitString> label(c.n_wires());
  std::vector<uint8_t> sel(c.n_wires(), 0);
  for (uint32_t w = 0; w < c.n_inputs; ++w) {
    label[w] = xhat.substr(size_t(w) * (lambda + 1), lambda);
    sel[w] = xhat.get(size_t(w) * (lambda + 1) + lambda);
  }

  for (size_t gi = 0; gi < c.gates.size(); ++gi) {
    const Gate& gt = c.gates[gi];
    uint32_t w = c.n_inputs + uint32_t(gi);
    const auto& rows = g.table[gi];
    if (rows.size() != kTableRows[unsigned(gt.op)])
      throw UsageError("geval: malformed garbled circuit");
    if (gt.op == Op::CONST) {
      label[w] = rows[0].substr(0, lambda);
      sel[w] = rows[0].get(lambda);
      continue;
    }
    unsigned r;
    BitString key;
    if (gt.op == Op::NOT) {
      r = sel[gt.a];
      key = label[gt.a];
    } else {
      r = 2u * sel[gt.a] + sel[gt.b];
      key = gt.a == gt.b ? label[gt.a] : label[gt.a] ^ label[gt.b];
    }
    BitString plain = rows[r] ^ row_mask(key, uint32_t(gi), r, lambda);
    for (size_t i = lambda + 1; i < plain.size(); ++i)
      if (plain.get(i)) throw GarbleError("garbled evaluation failed: bad row tag");
    label[w] = plain.substr(0, lambda);
    sel[w] = plain.get(lambda);
  }

  BitString y(c.outputs.size());
  for (size_t i = 0; i < c.outputs.size(); ++i) {
    const BitString& l = label[c.outputs[i]];
    if (l == g.decode[i][0])
      y.set(i, false);
    else if (l == g.decode[i][1])
      y.set(i, true);
    else
      throw GarbleError("garbled evaluation failed: undecodable output label");
  }
  return y;
}

std::pair<GarbledCircuit, BitString> garbsim(const BooleanCircuit& topo, const BitString& y,
                                             unsigned lambda, Rng& rng) {
  topo.validate();
  CfPrg::check_lambda(lambda);
  check_size(topo, lambda);
  if (y.size() != topo.outputs.size()) throw UsageError("garbsim: output length mismatch");

  // One active label and select bit per wire; inactive rows are noise.
  std::vector<BitString> active(topo.n_wires());
  std::vector<uint8_t> sel(topo.n_wires());
  for (uint32_t w = 0; w < topo.n_wires(); ++w) {
    active[w] = rng.bits(lambda);
    sel[w] = uint8_t(rng.coin());
  }

  GarbledCircuit g;
  g.lambda = lambda;
  g.topo = topo;
  for (size_t gi = 0; gi < topo.gates.size(); ++gi) {
    const Gate& gt = topo.gates[gi];
    uint32_t w = topo.n_inputs + uint32_t(gi);
    std::vector<BitString> rows;
    if (gt.op == Op::CONST) {
      BitString row = active[w];
      row.append(bool(sel[w]));
      rows.push_back(std::move(row));
    } else {
      unsigned live;
      BitString key;
      if (gt.op == Op::NOT) {
        live = sel[gt.a];
        key = active[gt.a];
      } else {
        live = 2u * sel[gt.a] + sel[gt.b];
        key = gt.a == gt.b ? active[gt.a] : active[gt.a] ^ active[gt.b];
      }
      for (unsigned r = 0; r < kTableRows[unsigned(gt.op)]; ++r) {
        if (r == live) {
          BitString plain = pack_label(active[w], sel[w], lambda, true);
          rows.push_back(plain ^ row_mask(key, uint32_t(gi), r, lambda));
        } else {
          rows.push_back(rng.bits(4 * size_t(lambda) + 1));
        }
      }
    }
    g.table.push_back(std::move(rows));
  }
  for (size_t i = 0; i < topo.outputs.size(); ++i) {
    std::array<BitString, 2> d;
    bool bit = y.get(i);
    d[bit] = active[topo.outputs[i]];
    BitString diff = rng.bits(lambda);
    diff.set(0, true); // same shape as real garbling: decode labels differ in the low bit
    d[!bit] = d[bit] ^ diff;
    g.decode.push_back(std::move(d));
  }

  BitString xhat;
  for (uint32_t w = 0; w < topo.n_inputs; ++w) {
    xhat.append(active[w]);
    xhat.append(bool(sel[w]));
  }
  return {std::move(g), std::move(xhat)};
}

} // namespace qot

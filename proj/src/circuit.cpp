#include "qot/circuit.hpp"

namespace qot {

void BooleanCircuit::validate() const {
  uint32_t wire = n_inputs;
  for (const auto& g : gates) {
    switch (g.op) {
      case Op::XOR:
      case Op::AND:
        if (g.a >= wire || g.b >= wire) throw UsageError("circuit: gate references later wire");
        break;
      case Op::NOT:
        if (g.a >= wire) throw UsageError("circuit: gate references later wire");
        break;
      case Op::CONST:
        if (g.a > 1) throw UsageError("circuit: bad constant");
        break;
      default:
        throw UsageError("circuit: unknown op");
    }
    ++wire;
  }
  for (uint32_t o : outputs)
    if (o >= wire) throw UsageError("circuit: output references missing wire");
}

void BooleanCircuit::eval_wires(const BitString& x, std::vector<uint8_t>& w) const {
  if (x.size() != n_inputs) throw UsageError("circuit: input width mismatch");
  w.resize(n_wires());
  for (uint32_t i = 0; i < n_inputs; ++i) w[i] = x.get(i);
  uint32_t wi = n_inputs;
  for (const auto& g : gates) {
    switch (g.op) {
      case Op::XOR: w[wi] = w[g.a] ^ w[g.b]; break;
      case Op::AND: w[wi] = w[g.a] & w[g.b]; break;
      case Op::NOT: w[wi] = w[g.a] ^ 1; break;
      case Op::CONST: w[wi] = uint8_t(g.a); break;
    }
    ++wi;
  }
}

BitString BooleanCircuit::eval(const BitString& x) const {
  std::vector<uint8_t> w;
  eval_wires(x, w);
  BitString y = BitString::zeros(outputs.size());
  for (size_t i = 0; i < outputs.size(); ++i) y.set(i, w[outputs[i]]);
  return y;
}

std::vector<uint8_t> BooleanCircuit::serialize() const {
  ByteWriter bw;
  bw.u32(n_inputs);
  bw.u32(uint32_t(gates.size()));
  for (const auto& g : gates) {
    bw.u8(uint8_t(g.op));
    bw.u32(g.a);
    bw.u32(g.b);
  }
  bw.u32(uint32_t(outputs.size()));
  for (uint32_t o : outputs) bw.u32(o);
  return bw.take();
}

BooleanCircuit BooleanCircuit::deserialize(std::span<const uint8_t> in) {
  ByteReader br(in);
  BooleanCircuit c;
  c.n_inputs = br.u32();
  uint32_t ng = br.u32();
  c.gates.reserve(ng);
  for (uint32_t i = 0; i < ng; ++i) {
    Gate g;
    g.op = Op(br.u8());
    g.a = br.u32();
    g.b = br.u32();
    c.gates.push_back(g);
  }
  uint32_t no = br.u32();
  c.outputs.reserve(no);
  for (uint32_t i = 0; i < no; ++i) c.outputs.push_back(br.u32());
  br.finish();
  c.validate();
  return c;
}

} // namespace qot

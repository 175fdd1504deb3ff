#pragma once

#include "qot/bits.hpp"

namespace qot {

//===----------------------------------------------------------------------===//
// BooleanCircuit: flat DAG of XOR/AND/NOT/CONST gates.
//
// Wire numbering: inputs are wires [0, n_inputs); gate g defines wire
// n_inputs + g.  Gates may only reference earlier wires, so the list is
// topologically ordered by construction.
//===----------------------------------------------------------------------===//

enum class Op : uint8_t { XOR = 0, AND = 1, NOT = 2, CONST = 3 };

struct Gate {
  Op op;
  uint32_t a = 0; // for CONST: the constant value (0/1)
  uint32_t b = 0; // unused for NOT/CONST

  bool operator==(const Gate&) const = default;
};

struct BooleanCircuit {
  uint32_t n_inputs = 0;
  std::vector<Gate> gates;
  std::vector<uint32_t> outputs;

  uint32_t n_wires() const { return n_inputs + uint32_t(gates.size()); }

  size_t and_count() const {
    size_t c = 0;
    for (const auto& g : gates) c += (g.op == Op::AND);
    return c;
  }

  void validate() const;

  BitString eval(const BitString& x) const;

  /// Evaluation into a caller-provided wire buffer (reused across calls).
  void eval_wires(const BitString& x, std::vector<uint8_t>& wires) const;

  std::vector<uint8_t> serialize() const;
  static BooleanCircuit deserialize(std::span<const uint8_t> in);

  bool operator==(const BooleanCircuit&) const = default;
};

//===----------------------------------------------------------------------===//
// CircuitBuilder: constant-folding gate emitter.
//
// Wire handles are int64: >= 0 is a circuit wire id, k0/k1 are the folded
// constants.  Constants materialize as CONST gates only when forced (e.g.
// a constant output).
//===----------------------------------------------------------------------===//

class CircuitBuilder {
public:
  using W = int64_t;
  static constexpr W k0 = -1;
  static constexpr W k1 = -2;

  explicit CircuitBuilder(uint32_t n_inputs) { c_.n_inputs = n_inputs; }

  W input(uint32_t i) const {
    if (i >= c_.n_inputs) throw UsageError("builder: input index out of range");
    return W(i);
  }
  std::vector<W> inputs(uint32_t from, uint32_t count) const {
    std::vector<W> v(count);
    for (uint32_t i = 0; i < count; ++i) v[i] = input(from + i);
    return v;
  }

  static W konst(bool v) { return v ? k1 : k0; }

  W xor_(W a, W b) {
    if (a == k0) return b;
    if (b == k0) return a;
    if (a == k1) return not_(b);
    if (b == k1) return not_(a);
    if (a == b) return k0;
    return emit(Op::XOR, a, b);
  }
  W and_(W a, W b) {
    if (a == k0 || b == k0) return k0;
    if (a == k1) return b;
    if (b == k1) return a;
    if (a == b) return a;
    return emit(Op::AND, a, b);
  }
  W not_(W a) {
    if (a == k0) return k1;
    if (a == k1) return k0;
    return emit(Op::NOT, a, 0);
  }
  W or_(W a, W b) { return xor_(xor_(a, b), and_(a, b)); }
  /// s ? hi : lo
  W mux(W s, W lo, W hi) { return xor_(lo, and_(s, xor_(lo, hi))); }
  W xnor(W a, W b) { return not_(xor_(a, b)); }

  W and_reduce(std::span<const W> v) {
    // balanced tree
    if (v.empty()) return k1;
    std::vector<W> cur(v.begin(), v.end());
    while (cur.size() > 1) {
      std::vector<W> nxt;
      for (size_t i = 0; i + 1 < cur.size(); i += 2) nxt.push_back(and_(cur[i], cur[i + 1]));
      if (cur.size() & 1) nxt.push_back(cur.back());
      cur = std::move(nxt);
    }
    return cur[0];
  }

  /// 1 iff a == b bitwise.
  W eq_reduce(std::span<const W> a, std::span<const W> b) {
    if (a.size() != b.size()) throw UsageError("eq_reduce length mismatch");
    std::vector<W> eqs(a.size());
    for (size_t i = 0; i < a.size(); ++i) eqs[i] = xnor(a[i], b[i]);
    return and_reduce(eqs);
  }

  /// 1 iff wires a equal the constant bits of k.
  W eq_const(std::span<const W> a, const BitString& k) {
    if (a.size() != k.size()) throw UsageError("eq_const length mismatch");
    std::vector<W> eqs(a.size());
    for (size_t i = 0; i < a.size(); ++i) eqs[i] = k.get(i) ? a[i] : not_(a[i]);
    return and_reduce(eqs);
  }

  /// XOR a constant bit pattern onto a wire vector.
  std::vector<W> xor_const(std::span<const W> a, const BitString& k) {
    if (a.size() != k.size()) throw UsageError("xor_const length mismatch");
    std::vector<W> out(a.size());
    for (size_t i = 0; i < a.size(); ++i) out[i] = k.get(i) ? not_(a[i]) : a[i];
    return out;
  }

  /// Ripple-carry a + b mod 2^w; both spans length w, bit 0 = LSB.
  std::vector<W> add_mod(std::span<const W> a, std::span<const W> b) {
    if (a.size() != b.size()) throw UsageError("add_mod length mismatch");
    std::vector<W> sum(a.size());
    W carry = k0;
    for (size_t i = 0; i < a.size(); ++i) {
      W axb = xor_(a[i], b[i]);
      sum[i] = xor_(axb, carry);
      if (i + 1 < a.size())
        carry = xor_(and_(a[i], b[i]), and_(carry, axb));
    }
    return sum;
  }

  void output(W w) { c_.outputs.push_back(materialize(w)); }
  void outputs(std::span<const W> ws) {
    for (W w : ws) output(w);
  }

  uint32_t wire_count() const { return c_.n_wires(); }

  BooleanCircuit take() { return std::move(c_); }

private:
  W emit(Op op, W a, W b) {
    Gate g;
    g.op = op;
    g.a = uint32_t(materialize(a));
    g.b = (op == Op::XOR || op == Op::AND) ? uint32_t(materialize(b)) : 0;
    c_.gates.push_back(g);
    return W(c_.n_wires() - 1);
  }
  W materialize(W w) {
    if (w >= 0) return w;
    Gate g;
    g.op = Op::CONST;
    g.a = (w == k1) ? 1 : 0;
    c_.gates.push_back(g);
    return W(c_.n_wires() - 1);
  }

  BooleanCircuit c_;
};

} // namespace qot

#include <doctest.h>

#include "qot/garble.hpp"

using namespace qot;

namespace {

/// Random circuit with every op represented: up to `max_gates` gates over
/// `n_in` inputs, 1-3 outputs.
BooleanCircuit random_circuit(Rng& rng, uint32_t n_in, uint32_t max_gates) {
  BooleanCircuit c;
  c.n_inputs = n_in;
  uint32_t ng = 1 + uint32_t(rng.below(max_gates));
  for (uint32_t i = 0; i < ng; ++i) {
    Gate g;
    uint32_t live = n_in + i;
    switch (rng.below(8)) {
    case 0: g.op = Op::NOT; g.a = uint32_t(rng.below(live)); break;
    case 1: g.op = Op::CONST; g.a = uint32_t(rng.below(2)); break;
    case 2: case 3: case 4:
      g.op = Op::XOR;
      g.a = uint32_t(rng.below(live));
      g.b = uint32_t(rng.below(live));
      break;
    default:
      g.op = Op::AND;
      g.a = uint32_t(rng.below(live));
      g.b = uint32_t(rng.below(live));
      break;
    }
    c.gates.push_back(g);
  }
  uint32_t no = 1 + uint32_t(rng.below(3));
  for (uint32_t i = 0; i < no; ++i) c.outputs.push_back(uint32_t(rng.below(c.n_wires())));
  c.validate();
  return c;
}

} // namespace

TEST_CASE("garbling is deterministic in the seed") {
  Rng rng(301);
  BooleanCircuit c = random_circuit(rng, 4, 20);
  BitString seed = rng.bits(8);
  auto [g1, e1] = garb(c, seed);
  auto [g2, e2] = garb(c, seed);
  CHECK(g1 == g2);
  CHECK(g1.serialize() == g2.serialize());
  CHECK(e1.label == e2.label);
  auto [g3, e3] = garb(c, rng.bits(8));
  CHECK(g1.serialize() != g3.serialize());
}

TEST_CASE("a garbled AND gate evaluates its truth table") {
  CircuitBuilder b(2);
  b.output(b.and_(b.input(0), b.input(1)));
  BooleanCircuit c = b.take();
  Rng rng(302);
  auto [g, e] = garb(c, rng.bits(8));
  for (uint64_t x = 0; x < 4; ++x) {
    BitString in = BitString::from_u64(x, 2);
    BitString y = geval(g, enc(e, in));
    CHECK(y.size() == 1);
    CHECK(y.get(0) == (x == 3));
  }
}

TEST_CASE("garbled evaluation matches plain evaluation exhaustively") {
  Rng rng(303);
  for (int it = 0; it < 100; ++it) {
    uint32_t n_in = 1 + uint32_t(rng.below(8));
    BooleanCircuit c = random_circuit(rng, n_in, 32);
    auto [g, e] = garb(c, rng.bits(8));
    for (uint64_t x = 0; x < (1ull << n_in); ++x) {
      BitString in = BitString::from_u64(x, n_in);
      CHECK(geval(g, enc(e, in)) == c.eval(in));
    }
  }
}

TEST_CASE("serialization round-trips and still evaluates") {
  Rng rng(304);
  BooleanCircuit c = random_circuit(rng, 5, 24);
  auto [g, e] = garb(c, rng.bits(8));
  auto bytes = g.serialize();
  GarbledCircuit g2 = GarbledCircuit::deserialize(bytes);
  CHECK(g == g2);
  BitString in = rng.bits(5);
  CHECK(geval(g2, enc(e, in)) == c.eval(in));

  auto truncated = bytes;
  truncated.resize(bytes.size() - 3);
  CHECK_THROWS_AS(GarbledCircuit::deserialize(truncated), QotError);
}

TEST_CASE("corrupted input labels are detected, never silently wrong") {
  // lambda 16: a flip that lands on another valid label needs an
  // intra-wire collision, negligible at this width.
  Rng rng(305);
  size_t detected = 0, silent = 0, harmless = 0;
  std::vector<std::pair<BooleanCircuit, std::pair<GarbledCircuit, WireLabels>>> pool;
  for (int i = 0; i < 50; ++i) {
    BooleanCircuit c = random_circuit(rng, 1 + uint32_t(rng.below(6)), 16);
    auto ge = garb(c, rng.bits(16));
    pool.push_back({std::move(c), std::move(ge)});
  }
  for (int it = 0; it < 10000; ++it) {
    auto& [c, ge] = pool[rng.below(pool.size())];
    auto& [g, e] = ge;
    BitString x = rng.bits(c.n_inputs);
    BitString xhat = enc(e, x);
    xhat.flip(rng.below(xhat.size()));
    try {
      BitString y = geval(g, xhat);
      if (y == c.eval(x))
        ++harmless; // the flipped label never fed a table
      else
        ++silent;
    } catch (const GarbleError&) {
      ++detected;
    }
  }
  CHECK(silent == 0);
  CHECK(detected > 5000);
  CHECK(detected + harmless == 10000);
}

TEST_CASE("encoding rejects wrong-length inputs") {
  CircuitBuilder b(3);
  b.output(b.and_(b.input(0), b.xor_(b.input(1), b.input(2))));
  BooleanCircuit c = b.take();
  Rng rng(306);
  auto [g, e] = garb(c, rng.bits(8));
  CHECK_THROWS_AS(enc(e, BitString(2)), UsageError);
  CHECK_THROWS_AS(geval(g, BitString(5)), UsageError);
}

TEST_CASE("oversized circuits are rejected at small lambda") {
  // lambda 6 keeps blocks distinct only for counters below 2^12; 1200
  // gates need 9600 row counters.  Built by hand so nothing folds.
  BooleanCircuit c;
  c.n_inputs = 1;
  for (uint32_t i = 0; i < 1200; ++i) {
    Gate g;
    g.op = i % 2 ? Op::AND : Op::NOT;
    g.a = i;
    g.b = i / 2;
    c.gates.push_back(g);
  }
  c.outputs.push_back(c.n_wires() - 1);
  c.validate();
  Rng rng(307);
  CHECK_THROWS_AS(garb(c, rng.bits(6)), UsageError);
  CHECK_NOTHROW(garb(c, rng.bits(8)));
}

TEST_CASE("simulated garblings evaluate to the requested output") {
  Rng rng(308);
  for (int it = 0; it < 50; ++it) {
    BooleanCircuit c = random_circuit(rng, 1 + uint32_t(rng.below(6)), 20);
    BitString y = rng.bits(c.outputs.size());
    auto [g, xhat] = garbsim(c, y, 8, rng);
    CHECK(geval(g, xhat) == y);
  }
}

TEST_CASE("simulated garblings have the same serialized shape as real ones") {
  Rng rng(309);
  BooleanCircuit c = random_circuit(rng, 6, 28);
  auto [gr, e] = garb(c, rng.bits(8));
  BitString y = rng.bits(c.outputs.size());
  auto [gs, xhat] = garbsim(c, y, 8, rng);
  CHECK(gr.serialize().size() == gs.serialize().size());
  CHECK(gr.payload_bits().size() == gs.payload_bits().size());
  CHECK(xhat.size() == enc(e, BitString(c.n_inputs)).size());
}

TEST_CASE("a row-duplicate counter cannot tell real from simulated") {
  Rng rng(310);
  BooleanCircuit c = random_circuit(rng, 4, 24);

  auto dup_count = [](const GarbledCircuit& g) {
    std::vector<BitString> rows;
    for (const auto& t : g.table)
      for (const auto& r : t) rows.push_back(r);
    size_t dups = 0;
    for (size_t i = 0; i < rows.size(); ++i)
      for (size_t j = i + 1; j < rows.size(); ++j)
        if (rows[i] == rows[j]) ++dups;
    return dups;
  };

  // 1000 real and 1000 simulated samples, labeled; the distinguisher picks
  // the best threshold on the feature after the fact.
  std::vector<std::pair<size_t, int>> samples;
  for (int i = 0; i < 1000; ++i) {
    auto [g, e] = garb(c, rng.bits(8));
    samples.push_back({dup_count(g), 1});
    BitString x = rng.bits(c.n_inputs);
    auto [gs, xhat] = garbsim(c, c.eval(x), 8, rng);
    samples.push_back({dup_count(gs), 0});
  }
  size_t best = 0;
  for (size_t thr = 0; thr <= 4; ++thr) {
    size_t hit_hi = 0, hit_lo = 0;
    for (auto& [f, is_real] : samples) {
      if ((f > thr) == (is_real == 1)) ++hit_hi;
      if ((f > thr) == (is_real == 0)) ++hit_lo;
    }
    best = std::max({best, hit_hi, hit_lo});
  }
  double accuracy = double(best) / double(samples.size());
  CHECK(accuracy <= 0.55);
}

TEST_CASE("simulator validates its arguments") {
  CircuitBuilder b(2);
  b.output(b.xor_(b.input(0), b.input(1)));
  BooleanCircuit c = b.take();
  Rng rng(311);
  CHECK_THROWS_AS(garbsim(c, BitString(2), 8, rng), UsageError);
  CHECK_THROWS_AS(garbsim(c, BitString(1), 7, rng), UsageError);
}

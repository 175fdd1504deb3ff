#include <doctest.h>

#include "qot/qsim.hpp"

#include <cmath>
#include <map>
#include <set>

using namespace qot;

TEST_CASE("same-basis measurement reproduces the prepared bit") {
  QubitBroker br(1);
  for (int b = 0; b < 2; ++b) {
    auto q1 = br.prepare(0, b, Basis::Plus);
    CHECK(br.measure(0, q1, Basis::Plus) == bool(b));
    auto q2 = br.prepare(0, b, Basis::Times);
    CHECK(br.measure(0, q2, Basis::Times) == bool(b));
  }
}

TEST_CASE("conjugate-basis measurement is a fair coin") {
  QubitBroker br(2);
  int ones = 0;
  const int trials = 10000;
  for (int t = 0; t < trials; ++t) {
    auto q = br.prepare(0, t & 1, Basis::Plus);
    ones += br.measure(0, q, Basis::Times);
  }
  double p = double(ones) / trials;
  CHECK(p >= 0.48);
  CHECK(p <= 0.52);
}

TEST_CASE("transmission moves ownership and kills the old handle") {
  QubitBroker br(3);
  auto q = br.prepare(0, 1, Basis::Plus);
  auto q2 = br.transmit(0, q, 1);

  CHECK_THROWS_AS(br.measure(0, q2, Basis::Plus), OwnershipError); // old owner, new handle
  CHECK_THROWS_AS(br.measure(0, q, Basis::Plus), DeadHandleError); // old handle is dead
  CHECK_THROWS_AS(br.transmit(0, q, 1), DeadHandleError);          // double transmit
  CHECK(br.measure(1, q2, Basis::Plus) == 1);
}

TEST_CASE("a handle can be measured at most once") {
  QubitBroker br(4);
  auto q = br.prepare(0, 0, Basis::Times);
  br.measure(0, q, Basis::Plus);
  CHECK_THROWS_AS(br.measure(0, q, Basis::Plus), DeadHandleError);

  auto [a, b] = br.epr_pair(0);
  br.measure(0, a, Basis::Plus);
  CHECK_THROWS_AS(br.measure(0, a, Basis::Times), DeadHandleError);
  br.measure(0, b, Basis::Plus);
  CHECK_THROWS_AS(br.measure(0, b, Basis::Plus), DeadHandleError);
}

TEST_CASE("epr halves agree in the same basis with fair marginals") {
  QubitBroker br(5);
  int ones = 0;
  const int trials = 10000;
  for (int t = 0; t < trials; ++t) {
    auto [a, b] = br.epr_pair(0);
    bool ba = br.measure(0, a, Basis::Plus);
    bool bb = br.measure(0, b, Basis::Plus);
    CHECK(ba == bb);
    ones += ba;
  }
  double p = double(ones) / trials;
  CHECK(p >= 0.48);
  CHECK(p <= 0.52);
}

TEST_CASE("epr halves in different bases give independent outcomes") {
  QubitBroker br(6);
  const int trials = 10000;
  int n[2][2] = {};
  for (int t = 0; t < trials; ++t) {
    auto [a, b] = br.epr_pair(0);
    bool ba = br.measure(0, a, Basis::Plus);
    bool bb = br.measure(0, b, Basis::Times);
    ++n[ba][bb];
  }
  // 2x2 chi-squared independence test, 1 dof, alpha = 0.01
  double N = trials;
  double a = n[0][0], b2 = n[0][1], c = n[1][0], d = n[1][1];
  double chi2 = N * std::pow(a * d - b2 * c, 2) /
                ((a + b2) * (c + d) * (a + c) * (b2 + d));
  CHECK(chi2 < 6.635);
}

TEST_CASE("handle ids never collide") {
  QubitBroker br(7);
  std::set<uint64_t> ids;
  for (int t = 0; t < 10000; ++t) {
    auto [a, b] = br.epr_pair(0);
    CHECK(ids.insert(a.id).second);
    CHECK(ids.insert(b.id).second);
    br.measure(0, a, Basis::Plus);
    br.measure(0, b, Basis::Times);
  }
  CHECK(br.live_handles() == 0);
}

namespace {

// One n-qubit session under an explicit coin stream.  Prepare-and-measure
// mode: the sender's bits come off the stream, qubits travel to the
// receiver.  EPR mode: the receiver measures its halves first, the sender
// measures afterwards.  Returns (sender bits, receiver bits).
std::pair<uint64_t, uint64_t> run_session(bool epr_mode, const std::vector<Basis>& ta,
                                          const std::vector<Basis>& tb,
                                          const std::vector<bool>& stream) {
  const size_t n = ta.size();
  QubitBroker br(0);
  size_t pos = 0;
  br.set_coin_source([&] {
    if (pos >= stream.size()) throw QotError("coin stream exhausted");
    return bool(stream[pos++]);
  });
  uint64_t xa = 0, xb = 0;
  if (!epr_mode) {
    for (size_t i = 0; i < n; ++i) {
      bool bit = stream.at(pos++); // sender's random bit, same probability space
      auto q = br.prepare(0, bit, ta[i]);
      auto q2 = br.transmit(0, q, 1);
      bool out = br.measure(1, q2, tb[i]);
      xa |= uint64_t(bit) << i;
      xb |= uint64_t(out) << i;
    }
  } else {
    std::vector<QubitRef> mine(n), theirs(n);
    for (size_t i = 0; i < n; ++i) {
      auto [a, b] = br.epr_pair(0);
      mine[i] = a;
      theirs[i] = br.transmit(0, b, 1);
    }
    for (size_t i = 0; i < n; ++i) xb |= uint64_t(br.measure(1, theirs[i], tb[i])) << i;
    for (size_t i = 0; i < n; ++i) xa |= uint64_t(br.measure(0, mine[i], ta[i])) << i;
  }
  return {xa, xb};
}

size_t coins_needed(const std::vector<Basis>& ta, const std::vector<Basis>& tb) {
  size_t mismatch = 0;
  for (size_t i = 0; i < ta.size(); ++i) mismatch += ta[i] != tb[i];
  return ta.size() + mismatch;
}

} // namespace

TEST_CASE("delayed epr measurement and prepare-and-measure give identical joint distributions") {
  using BV = std::vector<Basis>;
  const std::vector<std::pair<BV, BV>> configs = {
      {{Basis::Plus, Basis::Times, Basis::Plus}, {Basis::Plus, Basis::Plus, Basis::Times}},
      {{Basis::Plus, Basis::Plus, Basis::Plus}, {Basis::Plus, Basis::Plus, Basis::Plus}},
      {{Basis::Times, Basis::Times, Basis::Plus}, {Basis::Plus, Basis::Plus, Basis::Times}},
  };
  for (const auto& [ta, tb] : configs) {
    size_t L = coins_needed(ta, tb);
    std::map<std::pair<uint64_t, uint64_t>, int> dist_pm, dist_epr;
    for (uint64_t mask = 0; mask < (uint64_t(1) << L); ++mask) {
      std::vector<bool> stream(L);
      for (size_t i = 0; i < L; ++i) stream[i] = (mask >> i) & 1;
      ++dist_pm[run_session(false, ta, tb, stream)];
      ++dist_epr[run_session(true, ta, tb, stream)];
    }
    CHECK(dist_pm == dist_epr);
  }
}

TEST_CASE("the two modes agree statistically at n=16") {
  const size_t n = 16;
  Rng rng(99);
  std::vector<Basis> ta(n), tb(n);
  for (size_t i = 0; i < n; ++i) {
    ta[i] = basis_from_bit(rng.coin());
    tb[i] = basis_from_bit(rng.coin());
  }
  const int trials = 10000;
  // pool (sender bit, receiver bit) cells over the mismatched indices
  double cells[2][4] = {};
  for (int mode = 0; mode < 2; ++mode) {
    QubitBroker br(1000 + mode);
    Rng local(2000 + mode);
    for (int t = 0; t < trials; ++t) {
      uint64_t xa = 0, xb = 0;
      if (mode == 0) {
        for (size_t i = 0; i < n; ++i) {
          bool bit = local.coin();
          auto q2 = br.transmit(0, br.prepare(0, bit, ta[i]), 1);
          xa |= uint64_t(bit) << i;
          xb |= uint64_t(br.measure(1, q2, tb[i])) << i;
        }
      } else {
        std::vector<QubitRef> mine(n), theirs(n);
        for (size_t i = 0; i < n; ++i) {
          auto [a, b] = br.epr_pair(0);
          mine[i] = a;
          theirs[i] = br.transmit(0, b, 1);
        }
        for (size_t i = 0; i < n; ++i) xb |= uint64_t(br.measure(1, theirs[i], tb[i])) << i;
        for (size_t i = 0; i < n; ++i) xa |= uint64_t(br.measure(0, mine[i], ta[i])) << i;
      }
      for (size_t i = 0; i < n; ++i) {
        bool sa = (xa >> i) & 1, sb = (xb >> i) & 1;
        if (ta[i] == tb[i])
          CHECK(sa == sb); // matched bases agree exactly in both modes
        else
          cells[mode][2 * sa + sb] += 1;
      }
    }
  }
  // chi-squared homogeneity across the two modes, 3 dof, alpha = 0.01
  double chi2 = 0;
  for (int c = 0; c < 4; ++c) {
    double e = (cells[0][c] + cells[1][c]) * 0.5; // same trial count per mode
    for (int m = 0; m < 2; ++m) chi2 += std::pow(cells[m][c] - e, 2) / e;
  }
  CHECK(chi2 < 11.345);
}

TEST_CASE("biased measurement tables shift the outcome distribution") {
  QubitBroker br(8);
  MeasureBias always_one;
  always_one.p_conj = 1.0;
  for (int t = 0; t < 100; ++t) {
    auto q = br.prepare(0, 0, Basis::Plus);
    CHECK(br.measure_biased(0, q, Basis::Times, always_one) == 1);
  }
  MeasureBias flip;
  flip.p_same[0] = 1.0;
  flip.p_same[1] = 0.0;
  auto q = br.prepare(0, 1, Basis::Times);
  CHECK(br.measure_biased(0, q, Basis::Times, flip) == 0);

  MeasureBias quarter;
  quarter.p_conj = 0.25;
  int ones = 0;
  const int trials = 10000;
  for (int t = 0; t < trials; ++t) {
    auto p = br.prepare(0, 0, Basis::Plus);
    ones += br.measure_biased(0, p, Basis::Times, quarter);
  }
  CHECK(double(ones) / trials >= 0.23);
  CHECK(double(ones) / trials <= 0.27);
}

TEST_CASE("peek exposes preparation data to tests only after the fact") {
  QubitBroker br(9);
  auto q = br.prepare(3, 1, Basis::Times);
  auto info = br.peek(q);
  CHECK_FALSE(info.is_epr_half);
  CHECK(info.x == 1);
  CHECK(info.theta == Basis::Times);
  CHECK(info.alive);
  CHECK(info.owner == 3);
  br.measure(3, q, Basis::Times);
  CHECK_FALSE(br.peek(q).alive);
  CHECK_THROWS_AS(br.peek(QubitRef{999999}), DeadHandleError);
}

TEST_CASE("an explicit coin stream drives outcomes deterministically") {
  QubitBroker br(10);
  std::vector<bool> stream = {1, 0, 1};
  size_t pos = 0;
  br.set_coin_source([&] {
    if (pos >= stream.size()) throw QotError("coin stream exhausted");
    return bool(stream[pos++]);
  });
  std::vector<bool> outs;
  for (int i = 0; i < 3; ++i) {
    auto q = br.prepare(0, 0, Basis::Plus);
    outs.push_back(br.measure(0, q, Basis::Times));
  }
  CHECK(outs == std::vector<bool>{1, 0, 1});
  auto q = br.prepare(0, 0, Basis::Plus);
  CHECK_THROWS_AS(br.measure(0, q, Basis::Times), QotError);
  br.set_coin_source({});
  auto q2 = br.prepare(0, 1, Basis::Plus);
  CHECK(br.measure(0, q2, Basis::Plus) == 1);
}

#include "qot/transport.hpp"

#include <doctest.h>

#include <atomic>
#include <thread>

using namespace qot;

namespace {

Frame mk(uint64_t session, uint32_t seq, FrameKind kind, std::vector<uint8_t> payload) {
  Frame f;
  f.session_id = session;
  f.seq = seq;
  f.kind = kind;
  f.payload = std::move(payload);
  return f;
}

std::vector<uint8_t> rand_payload(Rng& rng, size_t max_len) {
  size_t n = rng.below(max_len + 1);
  std::vector<uint8_t> p(n);
  for (auto& b : p) b = static_cast<uint8_t>(rng.below(256));
  return p;
}

std::vector<uint8_t> transcript_bytes(const std::vector<TranscriptEntry>& t) {
  std::vector<uint8_t> out;
  for (const auto& e : t) {
    out.push_back(e.from);
    e.frame.encode(out);
  }
  return out;
}

} // namespace

TEST_CASE("frame roundtrips through the parser") {
  Frame f = mk(0x1122334455667788ull, 7, FrameKind::QubitRef, {1, 2, 3, 4, 5});
  std::vector<uint8_t> wire;
  f.encode(wire);
  CHECK(wire.size() == 4 + 17 + 5);

  FrameParser p;
  p.feed(wire);
  auto got = p.next();
  REQUIRE(bool(got));
  CHECK(*got == f);
  CHECK(!p.next());
  CHECK(p.buffered() == 0);

  Frame empty = mk(1, 0, FrameKind::Classical, {});
  wire.clear();
  empty.encode(wire);
  p.feed(wire);
  auto got2 = p.next();
  REQUIRE(bool(got2));
  CHECK(*got2 == empty);
}

TEST_CASE("parser reassembles concatenated frames under random splits") {
  Rng rng(0xf7a3e001);
  size_t total_splits = 0;
  for (int iter = 0; iter < 300; ++iter) {
    std::vector<Frame> frames;
    std::vector<uint8_t> wire;
    size_t count = 3 + rng.below(8);
    for (size_t i = 0; i < count; ++i) {
      auto kind = static_cast<FrameKind>(rng.below(3));
      frames.push_back(mk(42, static_cast<uint32_t>(i), kind, rand_payload(rng, 257)));
      frames.back().encode(wire);
    }

    FrameParser p;
    std::vector<Frame> parsed;
    size_t pos = 0;
    while (pos < wire.size()) {
      size_t chunk = 1 + rng.below(49);
      chunk = std::min(chunk, wire.size() - pos);
      p.feed(std::span(wire).subspan(pos, chunk));
      pos += chunk;
      ++total_splits;
      while (auto f = p.next()) parsed.push_back(std::move(*f));
    }
    REQUIRE(parsed == frames);
    CHECK(p.buffered() == 0);
  }
  // Every chunk boundary is a split point the parser had to cope with.
  CHECK(total_splits >= 10000);

  // Byte-at-a-time delivery: the worst case split everywhere.
  std::vector<Frame> frames;
  std::vector<uint8_t> wire;
  for (uint32_t i = 0; i < 20; ++i) {
    frames.push_back(mk(9, i, FrameKind::Classical, rand_payload(rng, 40)));
    frames.back().encode(wire);
  }
  FrameParser p;
  std::vector<Frame> parsed;
  for (uint8_t b : wire) {
    p.feed(std::span(&b, 1));
    while (auto f = p.next()) parsed.push_back(std::move(*f));
  }
  CHECK(parsed == frames);
}

TEST_CASE("parser rejects malformed frames") {
  auto feed_bytes = [](std::vector<uint8_t> bytes) {
    FrameParser p;
    p.feed(bytes);
    p.next();
  };

  // Total length shorter than a header.
  std::vector<uint8_t> short_len = {5, 0, 0, 0, 1, 2, 3, 4, 5};
  CHECK_THROWS_AS(feed_bytes(short_len), TransportError);

  // Unknown frame kind.
  Frame f = mk(1, 0, FrameKind::Classical, {0xaa});
  std::vector<uint8_t> wire;
  f.encode(wire);
  wire[4 + 12] = 9;
  CHECK_THROWS_AS(feed_bytes(wire), TransportError);

  // Payload length disagrees with total length.
  wire.clear();
  f.encode(wire);
  wire[4 + 13] = 7;
  CHECK_THROWS_AS(feed_bytes(wire), TransportError);
}

TEST_CASE("conn stamps outgoing seq and enforces incoming order") {
  std::vector<Frame> incoming = {
      mk(77, 0, FrameKind::Classical, {1}),
      mk(77, 1, FrameKind::Classical, {2}),
      mk(77, 3, FrameKind::Classical, {4}),
  };
  ReplayConn c(77, 0, incoming);
  c.send(FrameKind::Classical, {9});
  c.send(FrameKind::QubitRef, {8});
  REQUIRE(c.sent().size() == 2);
  CHECK(c.sent()[0].seq == 0);
  CHECK(c.sent()[1].seq == 1);
  CHECK(c.sent()[1].session_id == 77);

  CHECK(c.recv().payload == std::vector<uint8_t>{1});
  CHECK(c.recv().payload == std::vector<uint8_t>{2});
  // seq 3 arrives where 2 is required.
  CHECK_THROWS_AS(c.recv(), TransportError);

  ReplayConn wrong_session(77, 0, {mk(78, 0, FrameKind::Classical, {1})});
  CHECK_THROWS_AS(wrong_session.recv(), TransportError);

  ReplayConn kinds(5, 0, {mk(5, 0, FrameKind::QubitRef, {0, 0, 0, 0})});
  CHECK_THROWS_AS(kinds.recv_kind(FrameKind::Classical), TransportError);

  // Transcript keeps both directions with the right attribution.
  CHECK(c.transcript().size() == 4);
  CHECK(c.transcript()[0].from == 0);
  CHECK(c.transcript()[2].from == 1);
}

TEST_CASE("qubit reference payloads roundtrip") {
  std::vector<QubitRef> refs = {{1}, {0xffffffffffull}, {3}};
  auto payload = encode_qubit_refs(refs);
  auto back = decode_qubit_refs(payload);
  REQUIRE(back.size() == 3);
  CHECK(back[1].id == 0xffffffffffull);

  payload.push_back(0);
  CHECK_THROWS_AS(decode_qubit_refs(payload), QotError);
}

TEST_CASE("merge_transcript yields canonical order") {
  std::vector<TranscriptEntry> entries = {
      {1, mk(3, 1, FrameKind::Classical, {4})},
      {0, mk(3, 0, FrameKind::Classical, {1})},
      {1, mk(3, 0, FrameKind::Classical, {2})},
      {0, mk(3, 1, FrameKind::Classical, {3})},
  };
  auto merged = merge_transcript(entries);
  REQUIRE(merged.size() == 4);
  CHECK(merged[0].from == 0);
  CHECK(merged[0].frame.seq == 0);
  CHECK(merged[1].from == 1);
  CHECK(merged[1].frame.seq == 0);
  CHECK(merged[2].from == 0);
  CHECK(merged[2].frame.seq == 1);
  CHECK(merged[3].from == 1);
  CHECK(merged[3].frame.seq == 1);
}

namespace {

// Ping-pong exercised by the determinism tests: p0 opens each round, p1
// echoes a transformed payload, p0 checks it.
void pingpong_p0(Conn& c, uint64_t seed, int rounds) {
  Rng rng(seed);
  for (int i = 0; i < rounds; ++i) {
    auto msg = rand_payload(rng, 33);
    c.send(FrameKind::Classical, msg);
    auto echo = c.recv_kind(FrameKind::Classical);
    REQUIRE(echo.size() == msg.size());
    for (size_t j = 0; j < msg.size(); ++j) REQUIRE(echo[j] == static_cast<uint8_t>(msg[j] ^ 0x5a));
  }
}

void pingpong_p1(Conn& c, int rounds) {
  for (int i = 0; i < rounds; ++i) {
    auto msg = c.recv_kind(FrameKind::Classical);
    for (auto& b : msg) b ^= 0x5a;
    c.send(FrameKind::Classical, msg);
  }
}

} // namespace

TEST_CASE("in-process runs are deterministic given seeds") {
  auto run_once = [](uint64_t seed) {
    InProcNet net(1234);
    net.run([&](Conn& c) { pingpong_p0(c, seed, 50); }, [&](Conn& c) { pingpong_p1(c, 50); });
    CHECK(!net.deadlocked());
    CHECK(net.transcript().size() == 100);
    return transcript_bytes(net.transcript());
  };

  auto a = run_once(7);
  auto b = run_once(7);
  CHECK(a == b);
  auto c = run_once(8);
  CHECK(a != c);
}

TEST_CASE("in-process inboxes buffer bursts") {
  InProcNet net(1);
  std::vector<uint8_t> got;
  net.run(
      [&](Conn& c) {
        c.send(FrameKind::Classical, {1});
        c.send(FrameKind::Classical, {2});
        c.send(FrameKind::Classical, {3});
        got = c.recv().payload;
      },
      [&](Conn& c) {
        uint8_t sum = 0;
        for (int i = 0; i < 3; ++i) sum = static_cast<uint8_t>(sum + c.recv().payload.at(0));
        c.send(FrameKind::Classical, {sum});
      });
  CHECK(got == std::vector<uint8_t>{6});
  CHECK(net.transcript().size() == 4);
}

TEST_CASE("a dropped reply is reported as deadlock, not a hang") {
  // Drop party 1's second frame; party 0 then waits forever for it.
  FrameFilter drop = [](uint8_t from, const Frame& f) { return !(from == 1 && f.seq == 1); };
  InProcNet net(99, drop);
  net.run_captured([&](Conn& c) { pingpong_p0(c, 3, 5); }, [&](Conn& c) { pingpong_p1(c, 5); });

  CHECK(net.deadlocked());
  REQUIRE(bool(net.party_error(0)));
  CHECK_THROWS_WITH_AS(std::rethrow_exception(net.party_error(0)),
                       doctest::Contains("deadlock"), TransportError);
  // Party 1 blocks on round 3's request and is also released with the error.
  REQUIRE(bool(net.party_error(1)));
  CHECK_THROWS_AS(std::rethrow_exception(net.party_error(1)), TransportError);
}

TEST_CASE("a dropped frame inside a burst surfaces as a sequence gap") {
  FrameFilter drop = [](uint8_t from, const Frame& f) { return !(from == 0 && f.seq == 1); };
  InProcNet net(7, drop);
  net.run_captured(
      [&](Conn& c) {
        for (int i = 0; i < 3; ++i) c.send(FrameKind::Classical, {static_cast<uint8_t>(i)});
      },
      [&](Conn& c) {
        for (int i = 0; i < 3; ++i) c.recv();
      });
  CHECK(!net.deadlocked());
  CHECK(!net.party_error(0));
  REQUIRE(bool(net.party_error(1)));
  CHECK_THROWS_AS(std::rethrow_exception(net.party_error(1)), TransportError);
}

TEST_CASE("party exceptions propagate out of run") {
  InProcNet net(11);
  CHECK_THROWS_WITH_AS(net.run([](Conn&) { throw std::runtime_error("boom"); },
                               [](Conn& c) { c.recv(); }),
                       "boom", std::runtime_error);
}

TEST_CASE("tcp conns carry frames bit-exactly under load") {
  const uint16_t port = 42611;
  const uint64_t session = 0xabcdef;
  const int n_frames = 10000;

  std::thread server([&] {
    int fd = tcp_accept_one(port);
    TcpConn c(session, 1, fd);
    for (int i = 0; i < n_frames; ++i) {
      Frame f = c.recv();
      c.send(f.kind, f.payload);
    }
  });

  TcpConn c(session, 0, "127.0.0.1", port);
  Rng rng(0x7ea);
  for (int i = 0; i < n_frames; ++i) {
    auto kind = rng.coin() ? FrameKind::Classical : FrameKind::QubitRef;
    std::vector<uint8_t> payload;
    if (kind == FrameKind::QubitRef) {
      payload = encode_qubit_refs({{rng.u64()}});
    } else {
      payload = rand_payload(rng, 64);
    }
    c.send(kind, payload);
    Frame echo = c.recv();
    REQUIRE(echo.kind == kind);
    REQUIRE(echo.payload == payload);
    REQUIRE(echo.seq == static_cast<uint32_t>(i));
  }
  server.join();
  CHECK(c.transcript().size() == 2 * n_frames);
}

TEST_CASE("remote quantum endpoints drive a shared broker over tcp") {
  const uint16_t port = 42613;
  QubitBroker broker(0x51ee7);

  std::thread server([&] {
    auto fds = tcp_accept(port, 2);
    serve_broker(broker, fds[0], fds[1]);
  });

  {
    RemoteQuantum alice(5, 1, "127.0.0.1", port);
    RemoteQuantum bob(5, 2, "127.0.0.1", port);

    // Prepared qubit crosses the wire and measures deterministically in the
    // matching basis.
    QubitRef q = alice.prepare(true, Basis::Times);
    QubitRef q2 = alice.transmit(q, 2);
    CHECK_THROWS_AS(alice.measure(q, Basis::Times), DeadHandleError);
    CHECK(bob.measure(q2, Basis::Times) == true);
    CHECK_THROWS_AS(bob.measure(q2, Basis::Times), DeadHandleError);

    // Ownership is enforced across connections.
    QubitRef mine = alice.prepare(false, Basis::Plus);
    CHECK_THROWS_AS(bob.measure(mine, Basis::Plus), OwnershipError);
    CHECK(alice.measure(mine, Basis::Plus) == false);

    // Entangled halves agree in a matching basis.
    auto [h0, h1] = alice.epr_pair();
    QubitRef far = alice.transmit(h1, 2);
    bool a = alice.measure(h0, Basis::Plus);
    bool b = bob.measure(far, Basis::Plus);
    CHECK(a == b);

    // Biased measurement follows the supplied table.
    MeasureBias flip;
    flip.p_same[0] = 1.0;
    flip.p_same[1] = 0.0;
    QubitRef z = bob.prepare(false, Basis::Plus);
    CHECK(bob.measure_biased(z, Basis::Plus, flip) == true);
  }

  server.join();
  CHECK(broker.live_handles() == 0);
}

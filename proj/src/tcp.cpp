#include "qot/transport.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

namespace qot {

namespace {

[[noreturn]] void sys_fail(const std::string& what) {
  throw TransportError(what + ": " + std::strerror(errno));
}

void write_all(int fd, const uint8_t* data, size_t len) {
  while (len > 0) {
    ssize_t n = ::write(fd, data, len);
    if (n < 0) {
      if (errno == EINTR) continue;
      sys_fail("write");
    }
    data += n;
    len -= size_t(n);
  }
}

} // namespace

TcpConn::TcpConn(uint64_t session, uint8_t side, const std::string& host, uint16_t port)
    : Conn(session, side) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1)
    throw TransportError("bad address: " + host);
  // the peer process may come up slightly later; retry briefly
  for (int attempt = 0;; ++attempt) {
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd_ < 0) sys_fail("socket");
    if (::connect(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) == 0) break;
    ::close(fd_);
    fd_ = -1;
    if (attempt >= 100) sys_fail("connect");
    ::usleep(50 * 1000);
  }
  int one = 1;
  ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
}

TcpConn::TcpConn(uint64_t session, uint8_t side, int fd) : Conn(session, side), fd_(fd) {
  int one = 1;
  ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
}

TcpConn::~TcpConn() { close(); }

void TcpConn::close() {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
}

void TcpConn::send_impl(const Frame& f) {
  if (fd_ < 0) throw TransportError("send on closed connection");
  std::vector<uint8_t> wire;
  f.encode(wire);
  write_all(fd_, wire.data(), wire.size());
}

Frame TcpConn::recv_impl() {
  for (;;) {
    if (auto f = parser_.next()) return *f;
    if (fd_ < 0) throw TransportError("recv on closed connection");
    uint8_t buf[4096];
    ssize_t n = ::read(fd_, buf, sizeof(buf));
    if (n < 0) {
      if (errno == EINTR) continue;
      sys_fail("read");
    }
    if (n == 0) throw TransportError("connection closed by peer");
    parser_.feed(std::span<const uint8_t>(buf, size_t(n)));
  }
}

std::vector<int> tcp_accept(uint16_t port, int n) {
  int lfd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (lfd < 0) sys_fail("socket");
  int one = 1;
  ::setsockopt(lfd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = htons(port);
  if (::bind(lfd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) sys_fail("bind");
  if (::listen(lfd, 4) != 0) sys_fail("listen");
  std::vector<int> fds;
  for (int i = 0; i < n; ++i) {
    int fd = ::accept(lfd, nullptr, nullptr);
    if (fd < 0) sys_fail("accept");
    fds.push_back(fd);
  }
  ::close(lfd);
  return fds;
}

int tcp_accept_one(uint16_t port) { return tcp_accept(port, 1).front(); }

//===----------------------------------------------------------------------===//
// Broker service.  Requests and responses ride CONTROL frames; each request
// payload is [op u8][body], each response [status u8][body], where status 0
// is success, 1 ownership error, 2 dead handle, 3 other failure.
//===----------------------------------------------------------------------===//

namespace {

constexpr uint8_t kOpHello = 0xff;
constexpr uint8_t kOpPrepare = 0;
constexpr uint8_t kOpTransmit = 1;
constexpr uint8_t kOpMeasure = 2;
constexpr uint8_t kOpEpr = 3;
constexpr uint8_t kOpMeasureBiased = 4;

std::vector<uint8_t> handle_request(QubitBroker& broker, PartyId party,
                                    std::span<const uint8_t> payload) {
  ByteWriter out;
  try {
    ByteReader br(payload);
    uint8_t op = br.u8();
    switch (op) {
      case kOpPrepare: {
        bool x = br.u8();
        Basis th = basis_from_bit(br.u8());
        br.finish();
        auto q = broker.prepare(party, x, th);
        out.u8(0);
        out.u64(q.id);
        break;
      }
      case kOpTransmit: {
        QubitRef q{br.u64()};
        PartyId to = br.u8();
        br.finish();
        auto q2 = broker.transmit(party, q, to);
        out.u8(0);
        out.u64(q2.id);
        break;
      }
      case kOpMeasure: {
        QubitRef q{br.u64()};
        Basis th = basis_from_bit(br.u8());
        br.finish();
        bool b = broker.measure(party, q, th);
        out.u8(0);
        out.u8(b);
        break;
      }
      case kOpEpr: {
        br.finish();
        auto [a, b] = broker.epr_pair(party);
        out.u8(0);
        out.u64(a.id);
        out.u64(b.id);
        break;
      }
      case kOpMeasureBiased: {
        QubitRef q{br.u64()};
        Basis th = basis_from_bit(br.u8());
        MeasureBias bias;
        uint64_t p0 = br.u64(), p1 = br.u64(), pc = br.u64();
        std::memcpy(&bias.p_same[0], &p0, 8);
        std::memcpy(&bias.p_same[1], &p1, 8);
        std::memcpy(&bias.p_conj, &pc, 8);
        br.finish();
        bool b = broker.measure_biased(party, q, th, bias);
        out.u8(0);
        out.u8(b);
        break;
      }
      default:
        throw UsageError("broker: unknown op");
    }
  } catch (const OwnershipError&) {
    out = ByteWriter{};
    out.u8(1);
  } catch (const DeadHandleError&) {
    out = ByteWriter{};
    out.u8(2);
  } catch (const std::exception&) {
    out = ByteWriter{};
    out.u8(3);
  }
  return out.take();
}

} // namespace

void serve_broker(QubitBroker& broker, int fd_party0, int fd_party1) {
  struct Client {
    int fd;
    FrameParser parser;
    PartyId party = 0xff; // set by hello
    uint32_t seq_in = 0, seq_out = 0;
    bool open = true;
  };
  Client clients[2] = {{fd_party0, {}, 0xff, 0, 0, true}, {fd_party1, {}, 0xff, 0, 0, true}};

  auto pump = [&](Client& c) {
    uint8_t buf[4096];
    ssize_t n = ::read(c.fd, buf, sizeof(buf));
    if (n <= 0) {
      c.open = false;
      return;
    }
    c.parser.feed(std::span<const uint8_t>(buf, size_t(n)));
    while (auto f = c.parser.next()) {
      if (f->kind != FrameKind::Control) throw TransportError("broker: non-control frame");
      if (f->seq != c.seq_in++) throw TransportError("broker: out-of-order frame");
      if (!f->payload.empty() && f->payload[0] == kOpHello) {
        if (f->payload.size() != 2) throw TransportError("broker: bad hello");
        c.party = f->payload[1];
        continue;
      }
      if (c.party == 0xff) throw TransportError("broker: request before hello");
      Frame resp;
      resp.session_id = f->session_id;
      resp.seq = c.seq_out++;
      resp.kind = FrameKind::Control;
      resp.payload = handle_request(broker, c.party, f->payload);
      std::vector<uint8_t> wire;
      resp.encode(wire);
      write_all(c.fd, wire.data(), wire.size());
    }
  };

  while (clients[0].open || clients[1].open) {
    pollfd pfds[2];
    nfds_t n = 0;
    for (auto& c : clients)
      if (c.open) pfds[n++] = {c.fd, POLLIN, 0};
    if (::poll(pfds, n, -1) < 0) {
      if (errno == EINTR) continue;
      sys_fail("poll");
    }
    nfds_t k = 0;
    for (auto& c : clients) {
      if (!c.open) continue;
      if (pfds[k].revents & (POLLIN | POLLHUP | POLLERR)) pump(c);
      ++k;
    }
  }
}

//===----------------------------------------------------------------------===//
// RemoteQuantum
//===----------------------------------------------------------------------===//

RemoteQuantum::RemoteQuantum(uint64_t session, PartyId me, const std::string& host, uint16_t port)
    : me_(me), conn_(session, me, host, port) {
  conn_.send(FrameKind::Control, {kOpHello, me});
}

std::vector<uint8_t> RemoteQuantum::rpc(uint8_t op, const std::vector<uint8_t>& body) {
  ByteWriter bw;
  bw.u8(op);
  bw.bytes(body);
  conn_.send(FrameKind::Control, bw.take());
  auto resp = conn_.recv_kind(FrameKind::Control);
  ByteReader br(resp);
  uint8_t status = br.u8();
  switch (status) {
    case 0: break;
    case 1: throw OwnershipError("caller does not own this qubit");
    case 2: throw DeadHandleError("qubit handle is dead or unknown");
    default: throw QotError("broker request failed");
  }
  return {resp.begin() + 1, resp.end()};
}

QubitRef RemoteQuantum::prepare(bool x, Basis theta) {
  ByteWriter bw;
  bw.u8(x);
  bw.u8(basis_bit(theta));
  auto r = rpc(kOpPrepare, bw.take());
  ByteReader br(r);
  QubitRef q{br.u64()};
  br.finish();
  return q;
}

QubitRef RemoteQuantum::transmit(QubitRef q, PartyId to) {
  ByteWriter bw;
  bw.u64(q.id);
  bw.u8(to);
  auto r = rpc(kOpTransmit, bw.take());
  ByteReader br(r);
  QubitRef q2{br.u64()};
  br.finish();
  return q2;
}

bool RemoteQuantum::measure(QubitRef q, Basis theta_prime) {
  ByteWriter bw;
  bw.u64(q.id);
  bw.u8(basis_bit(theta_prime));
  auto r = rpc(kOpMeasure, bw.take());
  ByteReader br(r);
  bool b = br.u8();
  br.finish();
  return b;
}

std::pair<QubitRef, QubitRef> RemoteQuantum::epr_pair() {
  auto r = rpc(kOpEpr, {});
  ByteReader br(r);
  QubitRef a{br.u64()}, b{br.u64()};
  br.finish();
  return {a, b};
}

bool RemoteQuantum::measure_biased(QubitRef q, Basis theta_prime, const MeasureBias& bias) {
  ByteWriter bw;
  bw.u64(q.id);
  bw.u8(basis_bit(theta_prime));
  uint64_t p0, p1, pc;
  std::memcpy(&p0, &bias.p_same[0], 8);
  std::memcpy(&p1, &bias.p_same[1], 8);
  std::memcpy(&pc, &bias.p_conj, 8);
  bw.u64(p0);
  bw.u64(p1);
  bw.u64(pc);
  auto r = rpc(kOpMeasureBiased, bw.take());
  ByteReader br(r);
  bool b = br.u8();
  br.finish();
  return b;
}

} // namespace qot

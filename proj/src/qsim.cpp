#include "qot/qsim.hpp"

namespace qot {

bool QubitBroker::coin_locked() {
  if (coin_src_) return coin_src_();
  return rng_.coin();
}

bool QubitBroker::bernoulli_locked(double p) {
  if (p <= 0.0) return false;
  if (p >= 1.0) return true;
  if (p == 0.5) return coin_locked();
  // lazy comparison of a uniform bit stream against the binary digits of p
  double frac = p;
  for (int k = 0; k < 64; ++k) {
    frac *= 2;
    bool pk = frac >= 1.0;
    if (pk) frac -= 1.0;
    bool uk = coin_locked();
    if (uk != pk) return pk; // u < p iff u_k = 0 < p_k = 1 at first difference
  }
  return false;
}

QubitBroker::Slot& QubitBroker::live_slot_locked(PartyId caller, QubitRef q) {
  auto it = slots_.find(q.id);
  if (it == slots_.end() || !it->second.alive)
    throw DeadHandleError("qubit handle is dead or unknown");
  if (it->second.owner != caller) throw OwnershipError("caller does not own this qubit");
  return it->second;
}

QubitRef QubitBroker::prepare(PartyId caller, bool x, Basis theta) {
  std::lock_guard<std::mutex> lk(mu_);
  uint64_t id = next_id_++;
  Slot s;
  s.owner = caller;
  s.x = x;
  s.theta = theta;
  slots_.emplace(id, s);
  return QubitRef{id};
}

QubitRef QubitBroker::transmit(PartyId caller, QubitRef q, PartyId to) {
  std::lock_guard<std::mutex> lk(mu_);
  Slot& s = live_slot_locked(caller, q);
  Slot moved = s;
  moved.owner = to;
  s.alive = false;
  uint64_t id = next_id_++;
  slots_.emplace(id, moved);
  return QubitRef{id};
}

bool QubitBroker::measure_locked(PartyId caller, QubitRef q, Basis theta_prime,
                                 const MeasureBias& bias) {
  Slot& s = live_slot_locked(caller, q);
  bool out;
  if (!s.is_epr_half) {
    out = (theta_prime == s.theta) ? bernoulli_locked(bias.p_same[s.x])
                                   : bernoulli_locked(bias.p_conj);
  } else {
    PairState& p = pairs_[s.pair_id];
    if (!p.collapsed) {
      out = bernoulli_locked(bias.p_conj);
      p.collapsed = true;
      p.basis = theta_prime;
      p.bit = out;
    } else {
      out = (theta_prime == p.basis) ? bernoulli_locked(bias.p_same[p.bit])
                                     : bernoulli_locked(bias.p_conj);
    }
  }
  s.alive = false;
  return out;
}

bool QubitBroker::measure(PartyId caller, QubitRef q, Basis theta_prime) {
  std::lock_guard<std::mutex> lk(mu_);
  return measure_locked(caller, q, theta_prime, MeasureBias{});
}

bool QubitBroker::measure_biased(PartyId caller, QubitRef q, Basis theta_prime,
                                 const MeasureBias& bias) {
  std::lock_guard<std::mutex> lk(mu_);
  return measure_locked(caller, q, theta_prime, bias);
}

std::pair<QubitRef, QubitRef> QubitBroker::epr_pair(PartyId caller) {
  std::lock_guard<std::mutex> lk(mu_);
  uint64_t pid = next_pair_++;
  pairs_.emplace(pid, PairState{});
  Slot s;
  s.owner = caller;
  s.is_epr_half = true;
  s.pair_id = pid;
  uint64_t a = next_id_++, b = next_id_++;
  slots_.emplace(a, s);
  slots_.emplace(b, s);
  return {QubitRef{a}, QubitRef{b}};
}

QubitBroker::PeekInfo QubitBroker::peek(QubitRef q) const {
  std::lock_guard<std::mutex> lk(mu_);
  auto it = slots_.find(q.id);
  if (it == slots_.end()) throw DeadHandleError("peek: unknown handle");
  PeekInfo info;
  info.is_epr_half = it->second.is_epr_half;
  info.x = it->second.x;
  info.theta = it->second.theta;
  info.pair_id = it->second.pair_id;
  info.alive = it->second.alive;
  info.owner = it->second.owner;
  return info;
}

void QubitBroker::set_coin_source(std::function<bool()> fn) {
  std::lock_guard<std::mutex> lk(mu_);
  coin_src_ = std::move(fn);
}

size_t QubitBroker::live_handles() const {
  std::lock_guard<std::mutex> lk(mu_);
  size_t n = 0;
  for (const auto& [id, s] : slots_) n += s.alive;
  return n;
}

} // namespace qot

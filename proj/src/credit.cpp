#include "abrsim/credit.hpp"

#include "abrsim/errors.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace abrsim {

std::int64_t static_credit_size(Rate rate, SimTime one_way_delay) {
  auto rtt = boost::rational<std::int64_t>(2 * static_cast<std::int64_t>(one_way_delay),
                                           kTicksPerSecond);
  auto cells = rate.value() * rtt;
  auto whole = ceil_ticks(Micros(cells));
  return std::max<std::int64_t>(1, static_cast<std::int64_t>(whole));
}

std::int64_t static_credit_size(const Link& link) {
  return static_credit_size(link.rate(), link.propagation_delay());
}

void CreditState::register_vc(VcId vc, std::int64_t initial) {
  CreditVcState s;
  s.balance = initial;
  s.buffer_allocation = initial;
  s.credits_issued = static_cast<std::uint64_t>(initial);
  vcs_[vc] = s;
}

CreditVcState& CreditState::at(VcId vc) {
  auto it = vcs_.find(vc);
  if (it == vcs_.end()) throw UnknownVc("vc " + std::to_string(vc) + " has no credit state");
  return it->second;
}

const CreditVcState& CreditState::at(VcId vc) const {
  auto it = vcs_.find(vc);
  if (it == vcs_.end()) throw UnknownVc("vc " + std::to_string(vc) + " has no credit state");
  return it->second;
}

void CreditState::issue(VcId vc, std::int64_t n) {
  auto& s = at(vc);
  s.credits_issued += static_cast<std::uint64_t>(n);
  s.credits_in_flight += n;
}

void CreditState::deliver(VcId vc, std::int64_t n) {
  auto& s = at(vc);
  s.credits_in_flight -= n;
  s.balance += n;
}

std::int64_t CreditState::revoke(VcId vc, std::int64_t n) {
  auto& s = at(vc);
  const std::int64_t r = std::clamp<std::int64_t>(n, 0, std::max<std::int64_t>(s.balance, 0));
  s.balance -= r;
  s.credits_revoked += static_cast<std::uint64_t>(r);
  return r;
}

Gate credit_send_gate(CreditState& st, VcId vc) {
  auto& s = st.at(vc);
  if (s.balance <= 0) return Gate::Blocked;
  --s.balance;
  ++s.credits_consumed;
  ++s.cells_sent;
  return Gate::Permitted;
}

std::int64_t resync(CreditState& st, VcId vc, std::uint64_t sender_sent,
                    std::uint64_t receiver_received, std::uint64_t in_flight) {
  auto& s = st.at(vc);
  if (receiver_received + in_flight > sender_sent) {
    throw NegativeLoss("vc " + std::to_string(vc) + ": receiver counted more cells than were sent");
  }
  auto lost = static_cast<std::int64_t>(sender_sent - receiver_received - in_flight);
  if (lost > 0) {
    // Reissued credits land at the sender immediately: the exchange is
    // modelled with perfect knowledge of the link's contents.
    s.credits_issued += static_cast<std::uint64_t>(lost);
    s.balance += lost;
    s.cells_received += static_cast<std::uint64_t>(lost);
  }
  return lost;
}

std::vector<std::int64_t> adaptive_allocate(const std::vector<std::uint64_t>& usage,
                                            std::int64_t total_buffer, std::int64_t min_grant,
                                            std::uint64_t capacity) {
  const auto n = static_cast<std::int64_t>(usage.size());
  if (min_grant < 0 || total_buffer < n * min_grant) {
    throw InsufficientBuffer("buffer of " + std::to_string(total_buffer) + " cells cannot give " +
                             std::to_string(n) + " vcs " + std::to_string(min_grant) + " each");
  }
  std::vector<std::int64_t> out(usage.size(), min_grant);
  std::vector<bool> floored(usage.size(), false);
  for (std::size_t i = 0; i < usage.size(); ++i) floored[i] = usage[i] == 0;

  // Each pass floors the VCs whose proportional share fell below min_grant;
  // stops once every remaining share clears the floor.
  while (true) {
    std::int64_t budget = total_buffer;
    unsigned __int128 weight = 0;
    for (std::size_t i = 0; i < usage.size(); ++i) {
      if (floored[i]) {
        budget -= min_grant;
      } else {
        weight += usage[i];
      }
    }
    if (weight == 0) break;
    weight = std::max<unsigned __int128>(weight, capacity);
    bool changed = false;
    for (std::size_t i = 0; i < usage.size(); ++i) {
      if (floored[i]) continue;
      auto share = static_cast<std::int64_t>(static_cast<unsigned __int128>(budget) * usage[i] / weight);
      if (share < min_grant) {
        floored[i] = true;
        changed = true;
      }
      out[i] = share;
    }
    if (!changed) break;
    std::fill(out.begin(), out.end(), min_grant);
  }
  for (std::size_t i = 0; i < usage.size(); ++i) {
    if (floored[i]) out[i] = min_grant;
  }
  return out;
}

}  // namespace abrsim

#pragma once

// Per-VC, link-by-link credit flow control (FCVC).

#include "abrsim/cell.hpp"
#include "abrsim/link.hpp"

#include <cstdint>
#include <map>
#include <vector>

namespace abrsim {

/// ceil(rate x 2 x one-way delay), at least 1: enough credit for one VC to
/// keep the link busy for a full round trip.
std::int64_t static_credit_size(const Link& link);
std::int64_t static_credit_size(Rate rate, SimTime one_way_delay);

enum class Gate : std::uint8_t { Permitted, Blocked };

/// Credit bookkeeping of one VC on one link, sender and receiver side.
struct CreditVcState {
  std::int64_t balance = 0;           // sender: cells it may still send
  std::int64_t buffer_allocation = 0; // receiver: target buffer for this vc
  std::uint64_t cells_sent = 0;       // sender, cumulative
  std::uint64_t cells_received = 0;   // receiver, cumulative

  // Conservation counters: issued - consumed - revoked - in_flight == balance.
  std::uint64_t credits_issued = 0;
  std::uint64_t credits_consumed = 0;
  std::uint64_t credits_revoked = 0;
  std::int64_t credits_in_flight = 0;
};

/// Credit state for all VCs of one link.
class CreditState {
 public:
  /// Registers a VC with `initial` credits already at the sender.
  void register_vc(VcId vc, std::int64_t initial);
  bool contains(VcId vc) const { return vcs_.contains(vc); }

  CreditVcState& at(VcId vc);
  const CreditVcState& at(VcId vc) const;

  /// Receiver issues `n` credits that travel back to the sender.
  void issue(VcId vc, std::int64_t n);
  /// A credit cell carrying `n` reached the sender.
  void deliver(VcId vc, std::int64_t n);
  /// A revocation of up to `n` credits reached the sender. Only unspent
  /// credits can be taken back; returns how many were.
  std::int64_t revoke(VcId vc, std::int64_t n);

  const std::map<VcId, CreditVcState>& vcs() const { return vcs_; }

 private:
  std::map<VcId, CreditVcState> vcs_;
};

/// Permitted iff the VC's balance is positive; a permitted send consumes one
/// credit and counts the cell. Throws UnknownVc.
Gate credit_send_gate(CreditState& st, VcId vc);

/// Cells lost on the link since setup: sent - received - in_flight. The
/// receiver reissues that many credits and the counters are reconciled so
/// the same loss is never counted twice. Throws NegativeLoss when the
/// receiver reports more than was sent.
std::int64_t resync(CreditState& st, VcId vc, std::uint64_t sender_sent,
                    std::uint64_t receiver_received, std::uint64_t in_flight = 0);

/// Splits `total_buffer` in proportion to usage. VCs whose share would be
/// below `min_grant` (including idle ones) get exactly `min_grant`; the rest
/// share what remains. Floors keep the sum at or below `total_buffer`.
/// With a non-zero `capacity` (cells the link could carry in the period)
/// shares are usage / max(sum of usage, capacity), so spare link capacity
/// leaves room for a VC to grow from one period to the next.
/// Throws InsufficientBuffer when total_buffer < n x min_grant.
std::vector<std::int64_t> adaptive_allocate(const std::vector<std::uint64_t>& usage,
                                            std::int64_t total_buffer, std::int64_t min_grant = 2,
                                            std::uint64_t capacity = 0);

}  // namespace abrsim

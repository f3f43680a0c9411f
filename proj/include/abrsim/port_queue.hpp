#pragma once

#include "abrsim/cell.hpp"

#include <cstddef>
#include <deque>
#include <optional>
#include <unordered_set>

namespace abrsim {

enum class DropPolicy : std::uint8_t { TailDrop, EarlyPacketDiscard };

enum class EnqueueResult : std::uint8_t { Enqueued, Dropped };

/// Early-packet-discard bookkeeping for one output queue.
struct EpdState {
  std::size_t threshold = 0;
  std::unordered_set<VcId> discarding;  // dropping until the next EOM
  std::unordered_set<VcId> in_packet;   // last accepted cell was not an EOM
};

/// FIFO output queue of a port. The cell currently being serialized still
/// counts toward occupancy until its transmission completes.
class PortQueue {
 public:
  PortQueue() = default;
  PortQueue(std::optional<std::size_t> capacity, DropPolicy policy = DropPolicy::TailDrop,
            std::size_t epd_threshold = 0);

  std::size_t occupancy() const { return waiting_.size() + (in_service_ ? 1 : 0); }
  std::size_t waiting() const { return waiting_.size(); }
  bool has_waiting() const { return !waiting_.empty(); }
  const std::deque<Cell>& waiting_cells() const { return waiting_; }
  bool in_service() const { return in_service_; }
  const std::optional<std::size_t>& capacity() const { return capacity_; }
  DropPolicy policy() const { return policy_; }
  bool full() const { return capacity_ && occupancy() >= *capacity_; }

  /// CLP=1 cells are refused once occupancy reaches this level.
  void set_clp_threshold(std::optional<std::size_t> t) { clp_threshold_ = t; }

  /// Applies the configured drop policy (tail drop, or EPD then tail drop).
  EnqueueResult enqueue(Cell cell);

  /// Capacity-checked append with no packet policy.
  EnqueueResult push(Cell cell);

  /// Moves the head cell into service and returns it.
  Cell begin_service();
  void end_service() { in_service_ = false; }

  EpdState& epd() { return epd_; }
  const EpdState& epd() const { return epd_; }

  std::size_t max_occupancy() const { return max_occupancy_; }
  void reset_max_occupancy() { max_occupancy_ = occupancy(); }

 private:
  std::deque<Cell> waiting_;
  std::optional<std::size_t> capacity_;
  std::optional<std::size_t> clp_threshold_;
  DropPolicy policy_ = DropPolicy::TailDrop;
  EpdState epd_;
  bool in_service_ = false;
  std::size_t max_occupancy_ = 0;
};

/// Early packet discard. Once occupancy is at or above the threshold, the
/// first cell of a vc's next packet puts that vc into drop-until-EOM mode and
/// the whole packet is discarded. Packets already in progress are not cut.
/// RM cells bypass the policy. Remaining cells still face the capacity limit.
EnqueueResult epd_enqueue(EpdState& state, PortQueue& queue, Cell cell);

}  // namespace abrsim

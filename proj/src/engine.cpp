#include "abrsim/errors.hpp"
#include "abrsim/event_queue.hpp"
#include "abrsim/link.hpp"
#include "abrsim/port_queue.hpp"

#include <stdexcept>
#include <string>

namespace abrsim {

// ---------------------------------------------------------------- EventQueue

void EventQueue::schedule(Event ev) {
  if (ev.at < now_) {
    throw SchedulingInPast("event at t=" + std::to_string(ev.at) +
                           " scheduled when clock is " + std::to_string(now_));
  }
  ev.sequence = next_sequence_++;
  heap_.push(std::move(ev));
}

Event EventQueue::pop() {
  Event ev = heap_.top();
  heap_.pop();
  now_ = ev.at;
  return ev;
}

void EventQueue::advance_to(SimTime t) {
  if (t < now_) throw SchedulingInPast("clock cannot move backwards");
  now_ = t;
}

// ---------------------------------------------------------------------- Link

Link::Link(std::string id, Rate rate, SimTime propagation_delay, std::string from, std::string to)
    : id_(std::move(id)), rate_(rate), delay_(propagation_delay), from_(std::move(from)),
      to_(std::move(to)) {
  if (!rate_.positive()) throw std::invalid_argument("link " + id_ + ": rate must be positive");
  cell_time_ = rate_.interval();
}

SimTime Link::transmit(SimTime at) {
  Micros start(static_cast<std::int64_t>(at));
  if (free_at_ > start) start = free_at_;
  free_at_ = start + cell_time_;
  ++transmitted_;
  return ceil_ticks(free_at_) + delay_;
}

// ----------------------------------------------------------------- PortQueue

PortQueue::PortQueue(std::optional<std::size_t> capacity, DropPolicy policy,
                     std::size_t epd_threshold)
    : capacity_(capacity), policy_(policy) {
  epd_.threshold = epd_threshold;
}

EnqueueResult PortQueue::push(Cell cell) {
  if (full()) return EnqueueResult::Dropped;
  if (cell.clp && clp_threshold_ && occupancy() >= *clp_threshold_) return EnqueueResult::Dropped;
  waiting_.push_back(std::move(cell));
  if (occupancy() > max_occupancy_) max_occupancy_ = occupancy();
  return EnqueueResult::Enqueued;
}

EnqueueResult PortQueue::enqueue(Cell cell) {
  if (policy_ == DropPolicy::EarlyPacketDiscard) return epd_enqueue(epd_, *this, std::move(cell));
  return push(std::move(cell));
}

Cell PortQueue::begin_service() {
  if (waiting_.empty()) throw std::logic_error("begin_service on empty queue");
  if (in_service_) throw std::logic_error("port already serializing a cell");
  Cell c = std::move(waiting_.front());
  waiting_.pop_front();
  in_service_ = true;
  return c;
}

EnqueueResult epd_enqueue(EpdState& state, PortQueue& queue, Cell cell) {
  if (!cell.is_data()) return queue.push(std::move(cell));

  const VcId vc = cell.vc;
  if (state.discarding.contains(vc)) {
    if (cell.eom) state.discarding.erase(vc);
    return EnqueueResult::Dropped;
  }
  const bool at_boundary = !state.in_packet.contains(vc);
  if (at_boundary && queue.occupancy() >= state.threshold) {
    if (!cell.eom) state.discarding.insert(vc);
    return EnqueueResult::Dropped;
  }
  const bool eom = cell.eom;
  auto result = queue.push(std::move(cell));
  if (result == EnqueueResult::Enqueued) {
    if (eom) {
      state.in_packet.erase(vc);
    } else {
      state.in_packet.insert(vc);
    }
  }
  return result;
}

}  // namespace abrsim

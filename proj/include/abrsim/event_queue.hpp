#pragma once

#include "abrsim/cell.hpp"
#include "abrsim/units.hpp"

#include <cstdint>
#include <queue>
#include <variant>
#include <vector>

namespace abrsim {

using PortIndex = std::uint32_t;

struct CellArrival {
  PortIndex link = 0;  // the port (directed link) the cell travelled over
  Cell cell;
};

enum class TimerOwner : std::uint8_t { Port, Controller, Credit, Source, Metrics, Test };

struct TimerFire {
  TimerOwner owner = TimerOwner::Test;
  std::uint32_t index = 0;
  std::uint32_t tag = 0;
};

struct SourceWake {
  VcId vc = 0;
  std::uint64_t generation = 0;  // stale wakes are ignored by the source
};

using EventKind = std::variant<CellArrival, TimerFire, SourceWake>;

struct Event {
  SimTime at = 0;
  std::uint64_t sequence = 0;  // assigned by EventQueue::schedule
  EventKind kind;
};

/// Time-ordered event list with a stable (time, insertion) tie-break.
class EventQueue {
 public:
  /// Throws SchedulingInPast if ev.at is before the current clock.
  void schedule(Event ev);
  void schedule(SimTime at, EventKind kind) { schedule(Event{at, 0, std::move(kind)}); }

  bool empty() const { return heap_.empty(); }
  std::size_t size() const { return heap_.size(); }
  SimTime next_time() const { return heap_.top().at; }

  /// Removes the earliest event and advances the clock to its time.
  Event pop();

  SimTime now() const { return now_; }
  /// Moves the clock forward without processing anything.
  void advance_to(SimTime t);

  std::uint64_t scheduled_count() const { return next_sequence_; }

 private:
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      if (a.at != b.at) return a.at > b.at;
      return a.sequence > b.sequence;
    }
  };

  std::priority_queue<Event, std::vector<Event>, Later> heap_;
  SimTime now_ = 0;
  std::uint64_t next_sequence_ = 0;
};

}  // namespace abrsim

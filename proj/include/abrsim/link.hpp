#pragma once

#include "abrsim/units.hpp"

#include <string>

namespace abrsim {

/// A directed transmission line: finite cell rate plus propagation delay.
/// Serialization is tracked exactly so back-to-back cells never get more
/// than `rate` cells per second of service, even when 1/rate is not a whole
/// number of ticks.
class Link {
 public:
  Link(std::string id, Rate rate, SimTime propagation_delay, std::string from = {},
       std::string to = {});

  const std::string& id() const { return id_; }
  Rate rate() const { return rate_; }
  SimTime propagation_delay() const { return delay_; }
  const std::string& from() const { return from_; }
  const std::string& to() const { return to_; }

  /// Serializes one cell offered at `at`. Returns the tick at which it
  /// reaches the far end: max(at, free) + 1/rate + delay. Advances the
  /// link's free time by one cell time.
  SimTime transmit(SimTime at);

  /// Tick at which the most recent transmission finished serializing.
  SimTime free_time() const { return ceil_ticks(free_at_); }
  const Micros& exact_free_time() const { return free_at_; }
  bool idle_at(SimTime t) const { return free_at_ <= Micros(static_cast<std::int64_t>(t)); }

  std::uint64_t cells_transmitted() const { return transmitted_; }

 private:
  std::string id_;
  Rate rate_;
  SimTime delay_;
  std::string from_;
  std::string to_;
  Micros cell_time_;
  Micros free_at_{0};
  std::uint64_t transmitted_ = 0;
};

}  // namespace abrsim

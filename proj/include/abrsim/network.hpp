#pragma once

// The simulated network: sources, switches with per-port output queues and
// scheme controllers, destinations, all driven by one event queue.
//
// Every VC crosses an access link (source -> first switch), the trunk links
// of its route, and an egress link (last switch -> destination). Each
// directed link is a port with its own output queue. Backward RM cells and
// credit cells use the reverse direction of the same links.

#include "abrsim/config.hpp"
#include "abrsim/event_queue.hpp"
#include "abrsim/metrics.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace abrsim {

/// Data-cell accounting of one VC, each term counted independently.
struct ConservationCheck {
  std::uint64_t emitted = 0;
  std::uint64_t delivered = 0;
  std::uint64_t dropped = 0;
  std::uint64_t in_transit = 0;  // on a wire, arrival pending
  std::uint64_t queued = 0;      // waiting in some output queue

  bool holds() const { return emitted == delivered + dropped + in_transit + queued; }
};

struct PortInfo {
  std::string name;
  std::size_t occupancy = 0;
  std::size_t max_occupancy = 0;
  std::uint64_t cells_transmitted = 0;
  bool trunk = false;
  bool forward = false;
};

class Simulation {
 public:
  /// Validates the scenario (ConfigError) and builds the network.
  explicit Simulation(const ScenarioConfig& cfg);
  ~Simulation();
  Simulation(const Simulation&) = delete;
  Simulation& operator=(const Simulation&) = delete;

  /// Adds an externally built event. Throws SchedulingInPast.
  void schedule(Event ev);

  /// Processes every event with at <= end, leaves the clock at end and
  /// returns the metrics gathered so far (a partial interval is flushed).
  MetricsLog run_until(SimTime end);
  /// run_until(duration).
  MetricsLog run();

  SimTime now() const;
  std::uint64_t events_processed() const;
  /// Order-sensitive digest of every processed event.
  std::uint64_t trace_hash() const;

  /// Called after each processed event.
  void set_event_hook(std::function<void(const Event&)> hook);

  double acr(VcId vc) const;
  ConservationCheck conservation(VcId vc) const;
  std::vector<PortInfo> ports() const;

  /// Credit invariants at this instant: per-vc receiver queue within its
  /// buffer allocation, and issued - consumed - in flight == balance. Returns
  /// a description of each violation; empty when all hold.
  std::vector<std::string> credit_violations() const;

  const ScenarioConfig& config() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace abrsim

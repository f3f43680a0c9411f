#pragma once

#include "abrsim/cell.hpp"
#include "abrsim/units.hpp"

#include <cstdint>
#include <limits>
#include <random>

namespace abrsim {

inline constexpr SimTime kNever = std::numeric_limits<SimTime>::max();

enum class SourceKind : std::uint8_t { Persistent, Staggered, Bursty };
enum class BurstLoop : std::uint8_t { Open, Closed };

struct SourceModel {
  SourceKind kind = SourceKind::Persistent;
  VcId vc = 0;
  SimTime start = 0;             // Staggered (and the first burst of Bursty)
  std::uint32_t burst_cells = 0; // Bursty: data cells per burst
  SimTime idle = 0;              // Bursty: gap after a burst
  BurstLoop loop = BurstLoop::Open;
  bool random_idle = false;      // draw each gap from an exponential with mean `idle`

  static SourceModel persistent(VcId vc) { return {SourceKind::Persistent, vc}; }
  static SourceModel staggered(VcId vc, SimTime start) {
    return {SourceKind::Staggered, vc, start};
  }
  static SourceModel bursty(VcId vc, std::uint32_t cells, SimTime idle, BurstLoop loop,
                            SimTime start = 0) {
    return {SourceKind::Bursty, vc, start, cells, idle, loop};
  }
};

/// Emission schedule of one traffic source. Cell times are tracked exactly
/// (fractional microseconds) and handed out rounded up to ticks, so the
/// long-run rate matches the allowed rate even when 1/acr is not a whole
/// number of ticks.
class TrafficSource {
 public:
  explicit TrafficSource(SourceModel model, std::uint64_t seed = 0);

  const SourceModel& model() const { return model_; }

  /// Tick of the first cell. Throws SourceIdle when acr is zero.
  SimTime first_emission(double acr);

  /// A slot was used at `now`. `consumed_data` is false for RM cells that
  /// borrow a slot without advancing the burst. Returns the next slot, or
  /// kNever while a closed-loop source awaits its response.
  /// Throws SourceIdle when acr is zero and the source is active.
  SimTime next_emission(SimTime now, double acr, bool consumed_data = true);

  /// Recomputes the pending slot after the allowed rate changed.
  SimTime reschedule(SimTime now, double acr);

  /// Closed-loop bursty sources: the previous burst's response is complete.
  /// Returns the start of the next burst.
  SimTime on_response_complete(SimTime now);

  bool awaiting_response() const { return phase_ == Phase::AwaitResponse; }
  bool in_burst() const { return phase_ == Phase::Active; }
  /// True when the slot just handed out starts a new burst.
  bool burst_starting() const { return burst_pos_ == 0; }
  /// True when the data cell at the current slot closes its burst.
  bool burst_last_cell() const {
    return model_.kind == SourceKind::Bursty && burst_pos_ + 1 == model_.burst_cells;
  }
  std::uint64_t bursts_started() const { return bursts_; }

 private:
  enum class Phase : std::uint8_t { Active, Gap, AwaitResponse };

  double spacing(double acr) const;
  SimTime gap_length();

  SourceModel model_;
  std::mt19937_64 rng_;
  Phase phase_ = Phase::Active;
  double last_exact_ = 0.0;   // exact time of the last used slot
  double next_exact_ = 0.0;   // exact time of the pending slot
  bool emitted_any_ = false;
  std::uint32_t burst_pos_ = 0;
  std::uint64_t bursts_ = 0;
};

/// Convenience wrapper: the slot after `now` for a fresh source of `model`
/// (or its first slot when nothing has been sent yet).
SimTime next_emission(const SourceModel& model, SimTime now, double acr);

}  // namespace abrsim

#pragma once

#include "abrsim/cell.hpp"
#include "abrsim/contract.hpp"
#include "abrsim/units.hpp"

#include <optional>

namespace abrsim {

/// Virtual-scheduling form of the generic cell rate algorithm.
struct GcraState {
  Micros increment{0};  // nominal inter-cell time
  Micros limit{0};      // tolerance: CDVT for the PCR bucket, BT for the SCR bucket
  Micros tat{0};        // theoretical arrival time

  GcraState() = default;
  GcraState(Micros inc, Micros lim) : increment(inc), limit(lim) {}
};

enum class Conformance : std::uint8_t { Conforming, NonConforming };

/// Pure test: does an arrival at `arrival` conform? (arrival >= tat - limit)
bool gcra_conforms(const GcraState& state, const Micros& arrival);

/// Records a conforming arrival: tat = max(arrival, tat) + increment.
void gcra_commit(GcraState& state, const Micros& arrival);

/// Test and, when conforming, commit. Non-conforming arrivals leave tat alone.
Conformance gcra_check(GcraState& state, const Micros& arrival);
inline Conformance gcra_check(GcraState& state, SimTime arrival) {
  return gcra_check(state, Micros(static_cast<std::int64_t>(arrival)));
}

enum class PoliceAction : std::uint8_t { Drop, TagClp };
enum class PoliceResult : std::uint8_t { Admit, AdmitTagged, Reject };

/// Network-entry usage parameter control for one VC: GCRA(1/PCR, CDVT) and,
/// when the contract has an SCR, GCRA(1/SCR, BT). Bucket state advances
/// only for cells that conform to every applicable bucket.
class Policer {
 public:
  Policer(const TrafficContract& contract, PoliceAction action);

  /// Tags the cell's CLP bit in place when the result is AdmitTagged.
  PoliceResult police(Cell& cell, const Micros& arrival);
  PoliceResult police(Cell& cell, SimTime arrival) {
    return police(cell, Micros(static_cast<std::int64_t>(arrival)));
  }

  const GcraState& peak_bucket() const { return peak_; }
  const std::optional<GcraState>& sustained_bucket() const { return sustained_; }

 private:
  GcraState peak_;
  std::optional<GcraState> sustained_;
  PoliceAction action_;
};

/// One-shot form matching the usual call site: a fresh policer per contract
/// is kept by the caller, this runs a single cell through it.
inline PoliceResult police(Policer& policer, Cell& cell, SimTime arrival) {
  return policer.police(cell, arrival);
}

}  // namespace abrsim

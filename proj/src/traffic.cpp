#include "abrsim/errors.hpp"
#include "abrsim/gcra.hpp"
#include "abrsim/source_model.hpp"

#include <algorithm>
#include <cmath>

namespace abrsim {

namespace {

// Slots beyond the tick range (a vanishing allowed rate) never come.
SimTime to_tick(double exact) {
  if (!(exact < 1.8e19)) return kNever;
  return static_cast<SimTime>(std::ceil(exact));
}

}  // namespace

// ---------------------------------------------------------------------- GCRA

bool gcra_conforms(const GcraState& state, const Micros& arrival) {
  return arrival >= state.tat - state.limit;
}

void gcra_commit(GcraState& state, const Micros& arrival) {
  state.tat = std::max(arrival, state.tat) + state.increment;
}

Conformance gcra_check(GcraState& state, const Micros& arrival) {
  if (!gcra_conforms(state, arrival)) return Conformance::NonConforming;
  gcra_commit(state, arrival);
  return Conformance::Conforming;
}

Policer::Policer(const TrafficContract& contract, PoliceAction action)
    : peak_(contract.pcr.interval(), contract.cdvt), action_(action) {
  contract.validate();
  if (contract.scr) {
    Micros bt = contract.bt;
    if (contract.mbs) bt = bt_exact(*contract.mbs, *contract.scr, contract.pcr);
    sustained_ = GcraState(contract.scr->interval(), bt);
  }
}

PoliceResult Policer::police(Cell& cell, const Micros& arrival) {
  bool ok = gcra_conforms(peak_, arrival);
  if (sustained_) ok = ok && gcra_conforms(*sustained_, arrival);
  if (ok) {
    gcra_commit(peak_, arrival);
    if (sustained_) gcra_commit(*sustained_, arrival);
    return PoliceResult::Admit;
  }
  if (action_ == PoliceAction::Drop) return PoliceResult::Reject;
  cell.clp = true;
  return PoliceResult::AdmitTagged;
}

// ------------------------------------------------------------- TrafficSource

TrafficSource::TrafficSource(SourceModel model, std::uint64_t seed)
    : model_(model), rng_(seed ^ (0x9E3779B97F4A7C15ULL * (model.vc + 1))) {}

double TrafficSource::spacing(double acr) const {
  if (!(acr > 0.0)) {
    throw SourceIdle("vc " + std::to_string(model_.vc) + " has a zero allowed rate");
  }
  return static_cast<double>(kTicksPerSecond) / acr;
}

SimTime TrafficSource::gap_length() {
  if (!model_.random_idle || model_.idle == 0) return model_.idle;
  // Inverse-CDF exponential from the raw 53-bit mantissa; avoids the
  // implementation-defined std::exponential_distribution.
  double u = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
  return static_cast<SimTime>(std::llround(-static_cast<double>(model_.idle) * std::log1p(-u)));
}

SimTime TrafficSource::first_emission(double acr) {
  spacing(acr);  // validates acr
  phase_ = Phase::Active;
  burst_pos_ = 0;
  next_exact_ = static_cast<double>(model_.start);
  last_exact_ = next_exact_;
  emitted_any_ = false;
  if (model_.kind == SourceKind::Bursty) ++bursts_;
  return model_.start;
}

SimTime TrafficSource::next_emission(SimTime now, double acr, bool consumed_data) {
  (void)now;
  last_exact_ = next_exact_;
  emitted_any_ = true;
  if (consumed_data && model_.kind == SourceKind::Bursty) {
    if (++burst_pos_ >= model_.burst_cells) {
      burst_pos_ = 0;
      if (model_.loop == BurstLoop::Closed) {
        phase_ = Phase::AwaitResponse;
        return kNever;
      }
      phase_ = Phase::Gap;
      next_exact_ = last_exact_ + static_cast<double>(gap_length());
      ++bursts_;
      return to_tick(next_exact_);
    }
  }
  phase_ = Phase::Active;
  next_exact_ = last_exact_ + spacing(acr);
  return to_tick(next_exact_);
}

SimTime TrafficSource::reschedule(SimTime now, double acr) {
  if (phase_ == Phase::AwaitResponse) return kNever;
  if (phase_ != Phase::Gap && emitted_any_) {
    next_exact_ = std::max(static_cast<double>(now), last_exact_ + spacing(acr));
  } else {
    next_exact_ = std::max(static_cast<double>(now), next_exact_);
  }
  return to_tick(next_exact_);
}

SimTime TrafficSource::on_response_complete(SimTime now) {
  if (phase_ != Phase::AwaitResponse) return to_tick(next_exact_);
  phase_ = Phase::Gap;
  next_exact_ = static_cast<double>(now + gap_length());
  ++bursts_;
  return to_tick(next_exact_);
}

SimTime next_emission(const SourceModel& model, SimTime now, double acr) {
  if (!(acr > 0.0)) throw SourceIdle("zero allowed rate");
  if (now < model.start) return model.start;
  double next = static_cast<double>(now) + static_cast<double>(kTicksPerSecond) / acr;
  return to_tick(next);
}

}  // namespace abrsim

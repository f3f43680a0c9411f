#include "abrsim/schemes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace abrsim {

// ------------------------------------------------------------ end systems

SourceState SourceState::make(double pcr, double mcr, double air, double rdf, std::uint32_t nrm,
                              double initial_fraction) {
  SourceState s;
  s.pcr = pcr;
  s.mcr = mcr;
  s.air = air;
  s.rdf = rdf;
  s.nrm = nrm;
  s.acr = std::clamp(pcr * initial_fraction, mcr, pcr);
  return s;
}

DataSent source_on_data_sent(SourceState s) {
  s.acr = std::max(s.mcr, s.acr * s.rdf);
  bool rm = false;
  if (++s.data_since_rm >= s.nrm) {
    s.data_since_rm = 0;
    rm = true;
  }
  return {s, rm};
}

SourceState source_on_backward_rm(SourceState s, const RmPayload& rm) {
  double next = rm.ci ? std::min(s.acr, rm.er) : std::min({s.acr + s.air, rm.er, s.pcr});
  s.acr = std::min(std::max(s.mcr, next), s.pcr);
  return s;
}

RmPayload destination_turnaround(bool last_data_efci, RmPayload rm) {
  rm.direction = RmDirection::Backward;
  rm.ci = rm.ci || last_data_efci;
  return rm;
}

double becn_on_notification(double acr, double mcr) { return std::max(mcr, acr / 2.0); }

double becn_recover(double acr, double pcr) { return std::min(pcr, acr * 2.0); }

SimTime becn_recovery_period(SimTime base, double acr, double pcr) {
  double scaled = static_cast<double>(base) * (pcr > 0.0 ? acr / pcr : 1.0);
  return std::max<SimTime>(1, static_cast<SimTime>(std::llround(scaled)));
}

// --------------------------------------------------------- EFCI / EPRCA

bool EprcaSwitchState::congested(std::size_t occupancy) const {
  if (detector == CongestionDetector::QueueGrowth) return growing;
  return occupancy > queue_threshold;
}

Cell eprca_on_forward_data(EprcaSwitchState& st, std::size_t occupancy, Cell cell) {
  if (st.detector == CongestionDetector::QueueGrowth) {
    if (++st.cells_in_window >= st.growth_window) {
      st.growing = occupancy > st.last_queue_len;
      st.last_queue_len = occupancy;
      st.cells_in_window = 0;
    }
  }
  if (cell.is_data() && st.congested(occupancy)) cell.mark_efci();
  return cell;
}

RmPayload eprca_on_backward_rm(EprcaSwitchState& st, std::size_t occupancy, RmPayload rm) {
  st.macr = (1.0 - st.alpha) * st.macr + st.alpha * rm.ccr;
  const double fair = st.sw_dpf * st.macr;
  if (st.congested(occupancy) && rm.ccr > fair) rm.er = std::min(rm.er, fair);
  if (occupancy > st.ci_threshold) rm.ci = true;
  return rm;
}

// ------------------------------------------------------------------- OSU

OsuSwitchState osu_interval_update(OsuSwitchState st) {
  const double seconds = static_cast<double>(st.averaging_interval) / kTicksPerSecond;
  const double input_rate = seconds > 0.0 ? static_cast<double>(st.measured_input) / seconds : 0.0;
  st.z = st.target_rate > 0.0 ? input_rate / st.target_rate : 0.0;
  st.active_count = st.active_vcs.size();
  st.fair_share = st.target_rate / static_cast<double>(std::max<std::size_t>(1, st.active_count));
  st.measured = true;
  st.measured_input = 0;
  st.active_vcs.clear();
  return st;
}

RmPayload osu_feedback(const OsuSwitchState& st, RmPayload rm, double vc_rate) {
  if (!st.measured) return rm;
  if (st.mode == OsuMode::CountBased && vc_rate < st.fair_share) {
    rm.er = std::min(rm.er, st.fair_share);
    return rm;
  }
  if (!(st.z > 0.0)) return rm;  // nothing arrived: no basis for a bound
  double bound;
  if (st.z < 1.0 - st.delta || st.z > 1.0 + st.delta) {
    bound = vc_rate / st.z;
  } else if (vc_rate > st.fair_share) {
    bound = vc_rate / (st.z / (1.0 + st.delta));
  } else {
    bound = vc_rate / (st.z / (1.0 - st.delta));
  }
  rm.er = std::min(rm.er, bound);
  return rm;
}

// ------------------------------------------------------------------ CAPC

CapcSwitchState capc_update(CapcSwitchState st, double z) {
  if (z < 1.0) {
    st.fair_share *= std::min(st.eru, 1.0 + (1.0 - z) * st.rup);
  } else if (z > 1.0) {
    st.fair_share *= std::max(st.erf, 1.0 - (z - 1.0) * st.rdn);
  }
  return st;
}

RmPayload capc_on_rm(const CapcSwitchState& st, std::size_t occupancy, RmPayload rm) {
  rm.er = std::min(rm.er, st.fair_share);
  if (occupancy > st.queue_threshold) rm.ci = true;
  return rm;
}

// ------------------------------------------------------------------ BECN

std::optional<RmPayload> becn_on_data(BecnSwitchState& st, std::size_t occupancy,
                                      const Cell& cell, SimTime now) {
  if (!cell.is_data() || occupancy <= st.queue_threshold) return std::nullopt;
  auto it = st.last_becn_sent.find(cell.vc);
  if (it != st.last_becn_sent.end() && now - it->second < st.min_spacing) return std::nullopt;
  st.last_becn_sent[cell.vc] = now;
  RmPayload rm;
  rm.direction = RmDirection::Backward;
  rm.ci = true;
  rm.bn = true;
  rm.er = 0.0;
  return rm;
}

// ------------------------------------------------- per-port controllers

EfciController::EfciController(EprcaSwitchState detector, std::optional<double> forced_probability,
                               std::uint64_t seed)
    : st_(detector), forced_(forced_probability), rng_(seed) {}

std::optional<RmPayload> EfciController::on_forward(Cell& cell, const PortQueue& q, SimTime) {
  if (!cell.is_data()) return std::nullopt;
  if (forced_) {
    // 53-bit uniform in [0, 1); keeps runs reproducible across standard libraries.
    double u = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
    if (u < *forced_) cell.mark_efci();
    return std::nullopt;
  }
  cell = eprca_on_forward_data(st_, q.occupancy(), std::move(cell));
  return std::nullopt;
}

void EfciController::on_backward_rm(VcId, RmPayload&, const PortQueue&, SimTime) {}

std::optional<RmPayload> EprcaController::on_forward(Cell& cell, const PortQueue& q, SimTime) {
  if (cell.is_data()) cell = eprca_on_forward_data(st_, q.occupancy(), std::move(cell));
  return std::nullopt;
}

void EprcaController::on_backward_rm(VcId, RmPayload& rm, const PortQueue& q, SimTime) {
  rm = eprca_on_backward_rm(st_, q.occupancy(), rm);
}

std::optional<RmPayload> OsuController::on_forward(Cell& cell, const PortQueue&, SimTime) {
  if (cell.kind == CellKind::Credit) return std::nullopt;
  st_.record_input(cell.vc);
  if (metered_) ++counting_[cell.vc];
  return std::nullopt;
}

void OsuController::on_backward_rm(VcId vc, RmPayload& rm, const PortQueue&, SimTime) {
  double rate = rm.ccr;
  if (metered_) {
    auto it = measured_rate_.find(vc);
    rate = it == measured_rate_.end() ? 0.0 : it->second;
  }
  rm = osu_feedback(st_, rm, rate);
}

void OsuController::on_interval(SimTime) {
  if (metered_) {
    const double seconds = static_cast<double>(st_.averaging_interval) / kTicksPerSecond;
    measured_rate_.clear();
    for (const auto& [vc, n] : counting_) measured_rate_[vc] = static_cast<double>(n) / seconds;
    counting_.clear();
  }
  st_ = osu_interval_update(std::move(st_));
}

std::optional<double> OsuController::load_factor() const {
  if (!st_.measured) return std::nullopt;
  return st_.z;
}

std::optional<RmPayload> CapcController::on_forward(Cell& cell, const PortQueue& q, SimTime) {
  if (cell.kind == CellKind::Credit) return std::nullopt;
  ++measured_input_;
  if (cell.is_rm() && q.occupancy() > st_.queue_threshold) cell.rm->ci = true;
  return std::nullopt;
}

void CapcController::on_backward_rm(VcId, RmPayload& rm, const PortQueue& q, SimTime) {
  rm = capc_on_rm(st_, q.occupancy(), rm);
}

void CapcController::on_interval(SimTime) {
  const double seconds = static_cast<double>(interval_) / kTicksPerSecond;
  const double input_rate = static_cast<double>(measured_input_) / seconds;
  measured_input_ = 0;
  if (st_.target_rate <= 0.0) return;
  z_ = input_rate / st_.target_rate;
  st_ = capc_update(st_, *z_);
}

std::optional<double> CapcController::load_factor() const { return z_; }

std::optional<RmPayload> BecnController::on_forward(Cell& cell, const PortQueue& q, SimTime now) {
  return becn_on_data(st_, q.occupancy(), cell, now);
}

void BecnController::on_backward_rm(VcId, RmPayload&, const PortQueue&, SimTime) {}

}  // namespace abrsim

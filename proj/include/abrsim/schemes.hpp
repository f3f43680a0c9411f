#pragma once

// Rate-based ABR control loop: end-system rules and per-port switch
// algorithms (binary EFCI/PRCA, EPRCA, OSU with TUB, CAPC, BECN).
// Every rate in here is cells per second.

#include "abrsim/cell.hpp"
#include "abrsim/port_queue.hpp"
#include "abrsim/units.hpp"

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <unordered_map>
#include <unordered_set>

namespace abrsim {

// ------------------------------------------------------------ end systems

struct SourceState {
  double acr = 0.0;
  double pcr = 0.0;
  double mcr = 0.0;
  double air = 0.0;   // additive increase per returned RM cell
  double rdf = 1.0;   // multiplicative decrease per data cell
  std::uint32_t nrm = 32;
  std::uint32_t data_since_rm = 0;

  /// acr = pcr * initial_fraction, clamped to [mcr, pcr].
  static SourceState make(double pcr, double mcr, double air, double rdf, std::uint32_t nrm,
                          double initial_fraction = 0.1);
};

struct DataSent {
  SourceState state;
  bool emit_rm = false;  // the next slot carries a forward RM cell
};

/// acr = max(mcr, acr * rdf); counts the cell and flags an RM every nrm cells.
DataSent source_on_data_sent(SourceState s);

/// CI clear: acr = max(mcr, min(acr + air, er, pcr)).
/// CI set:   acr = max(mcr, min(acr, er)); no increase, ER still binds.
SourceState source_on_backward_rm(SourceState s, const RmPayload& rm);

/// Turns a forward RM around, setting CI if the last data cell had EFCI.
RmPayload destination_turnaround(bool last_data_efci, RmPayload rm);

/// BECN source reactions: halve on notification (floor mcr), double per
/// quiet recovery period (ceiling pcr). The period scales with the current
/// rate, so slow VCs recover sooner.
double becn_on_notification(double acr, double mcr);
double becn_recover(double acr, double pcr);
SimTime becn_recovery_period(SimTime base, double acr, double pcr);

// --------------------------------------------------------- EFCI / EPRCA

enum class CongestionDetector : std::uint8_t { QueueLength, QueueGrowth };

struct EprcaSwitchState {
  double macr = 0.0;
  double alpha = 1.0 / 16.0;
  double sw_dpf = 7.0 / 8.0;
  std::size_t queue_threshold = 100;
  std::size_t ci_threshold = 200;  // "very congested": CI in returning RM cells
  std::size_t growth_window = 50;  // K
  std::size_t last_queue_len = 0;
  CongestionDetector detector = CongestionDetector::QueueLength;

  // QueueGrowth bookkeeping
  std::size_t cells_in_window = 0;
  bool growing = false;

  bool congested(std::size_t occupancy) const;
};

/// Sets EFCI on a forward data cell when the detector fires. In growth mode
/// the queue length is sampled every `growth_window` cells and the port is
/// congested while the latest sample exceeds the previous one.
Cell eprca_on_forward_data(EprcaSwitchState& st, std::size_t occupancy, Cell cell);
inline Cell eprca_on_forward_data(EprcaSwitchState& st, const PortQueue& q, Cell cell) {
  return eprca_on_forward_data(st, q.occupancy(), std::move(cell));
}

/// MACR = (1 - alpha) MACR + alpha CCR; fair = SW_DPF * MACR. When congested
/// and the VC runs above fair, ER drops to fair. CI set above ci_threshold.
RmPayload eprca_on_backward_rm(EprcaSwitchState& st, std::size_t occupancy, RmPayload rm);

// ------------------------------------------------------------------- OSU

enum class OsuMode : std::uint8_t { Interval, CountBased };

struct OsuSwitchState {
  double target_rate = 0.0;
  SimTime averaging_interval = 1000;
  double delta = 0.1;
  std::uint64_t measured_input = 0;       // cells seen this interval
  std::unordered_set<VcId> active_vcs;    // distinct VCs seen this interval
  OsuMode mode = OsuMode::Interval;

  // results of the last completed interval
  double z = 0.0;
  double fair_share = 0.0;
  std::size_t active_count = 0;
  bool measured = false;

  void record_input(VcId vc) {
    ++measured_input;
    active_vcs.insert(vc);
  }
};

/// Closes an averaging interval: z = input rate / target rate and
/// fair share = target / active VCs. Resets the counters.
OsuSwitchState osu_interval_update(OsuSwitchState st);

/// Bounds ER from the load factor. Outside [1-delta, 1+delta] every VC is
/// asked for vc_rate / z. Inside the band, VCs above the fair share get
/// vc_rate / (z / (1 + delta)) and the rest vc_rate / (z / (1 - delta)).
/// Count-based mode lifts VCs below the fair share straight to it.
RmPayload osu_feedback(const OsuSwitchState& st, RmPayload rm, double vc_rate);

// ------------------------------------------------------------------ CAPC

struct CapcSwitchState {
  double fair_share = 0.0;
  double rup = 0.06;
  double rdn = 0.5;
  double eru = 1.5;
  double erf = 0.5;
  std::size_t queue_threshold = 50;
  double target_rate = 0.0;
};

/// Underload: fair *= min(ERU, 1 + (1 - z) Rup).
/// Overload:  fair *= max(ERF, 1 - (z - 1) Rdn).
CapcSwitchState capc_update(CapcSwitchState st, double z);

/// ER capped at the fair share; CI while the queue is over threshold.
RmPayload capc_on_rm(const CapcSwitchState& st, std::size_t occupancy, RmPayload rm);

// ------------------------------------------------------------------ BECN

struct BecnSwitchState {
  std::size_t queue_threshold = 100;
  SimTime min_spacing = 0;
  std::unordered_map<VcId, SimTime> last_becn_sent;
};

/// Returns a backward notification for the cell's VC when the queue is over
/// threshold and the VC has not been notified within min_spacing.
std::optional<RmPayload> becn_on_data(BecnSwitchState& st, std::size_t occupancy,
                                      const Cell& cell, SimTime now);
inline std::optional<RmPayload> becn_on_data(BecnSwitchState& st, const PortQueue& q,
                                             const Cell& cell, SimTime now) {
  return becn_on_data(st, q.occupancy(), cell, now);
}

// ------------------------------------------------- per-port controllers

/// Switch-side state attached to one output port. The simulator calls
/// on_forward for every cell about to be queued, on_backward_rm for every
/// backward RM of a VC that leaves the switch through this port, and
/// on_interval every interval() ticks when interval() is non-zero.
class PortController {
 public:
  virtual ~PortController() = default;

  /// May mark the cell. A returned payload is a switch-generated backward
  /// notification for the cell's VC.
  virtual std::optional<RmPayload> on_forward(Cell& cell, const PortQueue& q, SimTime now) = 0;
  virtual void on_backward_rm(VcId vc, RmPayload& rm, const PortQueue& q, SimTime now) = 0;
  virtual SimTime interval() const { return 0; }
  virtual void on_interval(SimTime now) { (void)now; }

  /// Latest load factor, where the algorithm measures one.
  virtual std::optional<double> load_factor() const { return std::nullopt; }
};

/// Binary feedback only (PRCA): EFCI from the congestion detector, or, in
/// forced-marking mode, independently with a fixed probability per cell.
class EfciController final : public PortController {
 public:
  EfciController(EprcaSwitchState detector, std::optional<double> forced_probability,
                 std::uint64_t seed);
  std::optional<RmPayload> on_forward(Cell& cell, const PortQueue& q, SimTime now) override;
  void on_backward_rm(VcId vc, RmPayload& rm, const PortQueue& q, SimTime now) override;

 private:
  EprcaSwitchState st_;
  std::optional<double> forced_;
  std::mt19937_64 rng_;
};

class EprcaController final : public PortController {
 public:
  explicit EprcaController(EprcaSwitchState st) : st_(st) {}
  std::optional<RmPayload> on_forward(Cell& cell, const PortQueue& q, SimTime now) override;
  void on_backward_rm(VcId vc, RmPayload& rm, const PortQueue& q, SimTime now) override;
  const EprcaSwitchState& state() const { return st_; }

 private:
  EprcaSwitchState st_;
};

/// Feedback uses the RM cell's CCR as the VC rate, or, when metered, the
/// VC's cell count over the last averaging interval.
class OsuController final : public PortController {
 public:
  explicit OsuController(OsuSwitchState st, bool metered = false)
      : st_(std::move(st)), metered_(metered) {}
  std::optional<RmPayload> on_forward(Cell& cell, const PortQueue& q, SimTime now) override;
  void on_backward_rm(VcId vc, RmPayload& rm, const PortQueue& q, SimTime now) override;
  SimTime interval() const override { return st_.averaging_interval; }
  void on_interval(SimTime now) override;
  std::optional<double> load_factor() const override;
  const OsuSwitchState& state() const { return st_; }

 private:
  OsuSwitchState st_;
  bool metered_;
  std::unordered_map<VcId, std::uint64_t> counting_;
  std::unordered_map<VcId, double> measured_rate_;
};

class CapcController final : public PortController {
 public:
  CapcController(CapcSwitchState st, SimTime averaging_interval)
      : st_(st), interval_(averaging_interval) {}
  std::optional<RmPayload> on_forward(Cell& cell, const PortQueue& q, SimTime now) override;
  void on_backward_rm(VcId vc, RmPayload& rm, const PortQueue& q, SimTime now) override;
  SimTime interval() const override { return interval_; }
  void on_interval(SimTime now) override;
  std::optional<double> load_factor() const override;
  const CapcSwitchState& state() const { return st_; }

 private:
  CapcSwitchState st_;
  SimTime interval_;
  std::uint64_t measured_input_ = 0;
  std::optional<double> z_;
};

class BecnController final : public PortController {
 public:
  explicit BecnController(BecnSwitchState st) : st_(std::move(st)) {}
  std::optional<RmPayload> on_forward(Cell& cell, const PortQueue& q, SimTime now) override;
  void on_backward_rm(VcId vc, RmPayload& rm, const PortQueue& q, SimTime now) override;

 private:
  BecnSwitchState st_;
};

}  // namespace abrsim

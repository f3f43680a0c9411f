#pragma once

#include "abrsim/cell.hpp"
#include "abrsim/units.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace abrsim {

/// One row per (interval, vc). Rates are cells per second over the interval
/// ending at `time`.
struct IntervalRow {
  SimTime time = 0;
  VcId vc = 0;
  double throughput = 0.0;
  std::optional<double> acr;  // absent for credit-controlled VCs
  std::size_t queue_max = 0;  // largest occupancy on the vc's trunk ports
  std::uint64_t dropped = 0;  // data cells of the vc lost in the interval
  double efci_fraction = 0.0; // of delivered data cells
  std::optional<double> fairness_index;  // same for every vc of the interval
  std::uint64_t delivered = 0;
};

struct PortSample {
  SimTime time = 0;
  std::string port;
  std::size_t queue_max = 0;
  double queue_mean = 0.0;    // time average over the interval
  std::uint64_t input_cells = 0;
  std::optional<double> load_factor;
};

struct VcTotals {
  std::uint64_t emitted = 0;  // data cells
  std::uint64_t delivered = 0;
  std::uint64_t emitted_clp[2] = {0, 0};    // by CLP at network entry (after policing)
  std::uint64_t dropped_clp[2] = {0, 0};
  std::uint64_t policed_drops = 0;
  std::uint64_t tagged = 0;
  std::uint64_t efci_delivered = 0;
  std::uint64_t rm_emitted = 0;
  std::uint64_t rm_dropped = 0;
  double ctd_mean = 0.0;      // microseconds
  SimTime ctd_max = 0;
  SimTime cdv_peak_to_peak = 0;  // (1 - alpha) quantile minus minimum
  std::vector<SimTime> burst_response_times;

  std::uint64_t dropped() const { return dropped_clp[0] + dropped_clp[1]; }
  /// Cell loss ratio of one CLP class; 0 when nothing of that class entered.
  double clr(int clp) const;
};

struct MetricsLog {
  SimTime interval = 0;
  SimTime end = 0;
  std::vector<VcId> vcs;
  std::vector<double> oracle;  // max-min rates in cells/s, order of `vcs`
  std::vector<IntervalRow> rows;
  std::vector<PortSample> ports;
  std::map<VcId, VcTotals> totals;
  bool conservation_ok = true;
  std::vector<std::string> conservation_failures;

  std::uint64_t total_dropped() const;
};

}  // namespace abrsim

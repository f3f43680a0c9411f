#pragma once

#include "abrsim/config.hpp"
#include "abrsim/metrics.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace abrsim {

/// Bumped whenever the metrics.csv column set or order changes.
inline constexpr int kCsvVersion = 1;

/// Fraction of the run, counted from the end, treated as steady state.
inline constexpr double kSteadyStateFraction = 0.25;

struct Headline {
  std::optional<double> steady_state_fairness;
  std::vector<double> steady_throughput;  // cells/s per vc over the steady-state window
  std::uint64_t total_loss = 0;
  std::size_t max_queue = 0;
  /// End of the first interval in which the vc reached 90% of its max-min
  /// rate, in microseconds; absent if it never did.
  std::vector<std::optional<SimTime>> time_to_90;
};

struct RunReport {
  std::string config_echo;  // serialize_config() of the scenario that ran
  std::vector<VcId> vcs;
  std::vector<double> oracle;
  Headline headline;
  MetricsLog log;
  std::string csv;
  int csv_version = kCsvVersion;
};

/// Builds the network, runs it for the configured duration and summarizes.
/// Throws ConfigError.
RunReport run_scenario(const ScenarioConfig& cfg);

/// Recomputes the headline from interval rows alone. `end` is the run length.
Headline headline_from_rows(const std::vector<IntervalRow>& rows, const std::vector<VcId>& vcs,
                            const std::vector<double>& oracle, SimTime end);

/// Header then one row per (interval, vc):
/// time,vc,throughput,acr,queue_max,dropped,efci_fraction,fairness_index.
/// Time in microseconds, rates in cells/s. Throws IoError on a failed write.
void emit_csv(const MetricsLog& log, std::ostream& out);
std::string csv_header();

/// Inverse of emit_csv. Throws IoError on a malformed header or row.
std::vector<IntervalRow> parse_csv(std::istream& in);

/// Per-port samples: time,port,queue_max,queue_mean,input_cells,load_factor.
void emit_ports_csv(const MetricsLog& log, std::ostream& out);

/// Human-readable report.txt contents.
std::string format_report(const RunReport& report);

}  // namespace abrsim

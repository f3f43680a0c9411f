#include "abrsim/harness.hpp"

#include "abrsim/errors.hpp"
#include "abrsim/fairness.hpp"
#include "abrsim/network.hpp"

#include <algorithm>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

namespace abrsim {

double VcTotals::clr(int clp) const {
  const auto entered = emitted_clp[clp ? 1 : 0];
  if (entered == 0) return 0.0;
  return static_cast<double>(dropped_clp[clp ? 1 : 0]) / static_cast<double>(entered);
}

std::uint64_t MetricsLog::total_dropped() const {
  std::uint64_t n = 0;
  for (const auto& [id, t] : totals) n += t.dropped();
  return n;
}

namespace {

std::string exact(double x) {
  std::ostringstream os;
  os << std::setprecision(std::numeric_limits<double>::max_digits10) << x;
  return os.str();
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

Headline headline_from_rows(const std::vector<IntervalRow>& rows, const std::vector<VcId>& vcs,
                            const std::vector<double>& oracle, SimTime end) {
  Headline h;
  std::map<VcId, std::size_t> index;
  for (std::size_t i = 0; i < vcs.size(); ++i) index[vcs[i]] = i;

  const double window_start = static_cast<double>(end) * (1.0 - kSteadyStateFraction);
  std::vector<double> weighted(vcs.size(), 0.0);
  std::vector<double> weight(vcs.size(), 0.0);
  std::vector<SimTime> prev(vcs.size(), 0);
  h.time_to_90.assign(vcs.size(), std::nullopt);

  for (const auto& r : rows) {
    h.total_loss += r.dropped;
    h.max_queue = std::max(h.max_queue, r.queue_max);
    auto it = index.find(r.vc);
    if (it == index.end()) continue;
    const std::size_t i = it->second;
    const SimTime len = r.time - prev[i];
    if (static_cast<double>(r.time) > window_start && len > 0) {
      weighted[i] += r.throughput * static_cast<double>(len);
      weight[i] += static_cast<double>(len);
    }
    prev[i] = r.time;
    if (!h.time_to_90[i] && i < oracle.size() && oracle[i] > 0.0 && r.throughput >= 0.9 * oracle[i]) {
      h.time_to_90[i] = r.time;
    }
  }

  h.steady_throughput.assign(vcs.size(), 0.0);
  for (std::size_t i = 0; i < vcs.size(); ++i) {
    if (weight[i] > 0.0) h.steady_throughput[i] = weighted[i] / weight[i];
  }
  const bool positive = oracle.size() == vcs.size() && !oracle.empty() &&
                        std::all_of(oracle.begin(), oracle.end(), [](double x) { return x > 0.0; });
  const bool any = std::any_of(h.steady_throughput.begin(), h.steady_throughput.end(),
                               [](double x) { return x > 0.0; });
  if (positive && any) h.steady_state_fairness = fairness_index(h.steady_throughput, oracle);
  return h;
}

RunReport run_scenario(const ScenarioConfig& cfg) {
  Simulation sim(cfg);
  RunReport report;
  report.log = sim.run();
  report.config_echo = serialize_config(cfg);
  report.vcs = report.log.vcs;
  report.oracle = report.log.oracle;
  report.headline = headline_from_rows(report.log.rows, report.vcs, report.oracle, cfg.duration);
  std::ostringstream csv;
  emit_csv(report.log, csv);
  report.csv = csv.str();
  return report;
}

std::string csv_header() { return "time,vc,throughput,acr,queue_max,dropped,efci_fraction,fairness_index"; }

void emit_csv(const MetricsLog& log, std::ostream& out) {
  out << csv_header() << '\n';
  for (const auto& r : log.rows) {
    out << r.time << ',' << r.vc << ',' << exact(r.throughput) << ',' << (r.acr ? exact(*r.acr) : "") << ','
        << r.queue_max << ',' << r.dropped << ',' << exact(r.efci_fraction) << ','
        << (r.fairness_index ? exact(*r.fairness_index) : "") << '\n';
  }
  out.flush();
  if (!out) throw IoError("failed to write metrics csv");
}

std::vector<IntervalRow> parse_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw IoError("metrics csv is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != csv_header()) throw IoError("unexpected metrics csv header: " + line);
  std::vector<IntervalRow> rows;
  int n = 1;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty() || line == "\r") continue;
    auto f = split_csv(line);
    if (f.size() != 8) throw IoError("metrics csv line " + std::to_string(n) + ": expected 8 fields");
    try {
      IntervalRow r;
      r.time = std::stoull(f[0]);
      r.vc = static_cast<VcId>(std::stoul(f[1]));
      r.throughput = std::stod(f[2]);
      if (!f[3].empty()) r.acr = std::stod(f[3]);
      r.queue_max = std::stoull(f[4]);
      r.dropped = std::stoull(f[5]);
      r.efci_fraction = std::stod(f[6]);
      if (!f[7].empty()) r.fairness_index = std::stod(f[7]);
      rows.push_back(r);
    } catch (const std::logic_error&) {
      throw IoError("metrics csv line " + std::to_string(n) + ": malformed number");
    }
  }
  return rows;
}

void emit_ports_csv(const MetricsLog& log, std::ostream& out) {
  out << "time,port,queue_max,queue_mean,input_cells,load_factor\n";
  for (const auto& p : log.ports) {
    out << p.time << ',' << p.port << ',' << p.queue_max << ',' << exact(p.queue_mean) << ',' << p.input_cells
        << ',' << (p.load_factor ? exact(*p.load_factor) : "") << '\n';
  }
  out.flush();
  if (!out) throw IoError("failed to write port csv");
}

std::string format_report(const RunReport& r) {
  std::ostringstream os;
  os << std::fixed;
  const auto& h = r.headline;
  os << "csv_version = " << r.csv_version << '\n';
  os << "duration_us = " << r.log.end << '\n';
  os << "steady_state_fairness = ";
  if (h.steady_state_fairness) {
    os << std::setprecision(6) << *h.steady_state_fairness;
  } else {
    os << "n/a";
  }
  os << '\n';
  os << "total_loss = " << h.total_loss << '\n';
  os << "max_queue = " << h.max_queue << '\n';
  os << "conservation = " << (r.log.conservation_ok ? "ok" : "VIOLATED") << '\n';
  for (const auto& msg : r.log.conservation_failures) os << "  " << msg << '\n';
  os << '\n';
  os << "vc  oracle_mbps  steady_mbps  time_to_90_ms  delivered  clr_clp0  clr_clp1  ctd_mean_us  ctd_max_us"
        "  cdv_p2p_us  bursts  mean_burst_response_ms\n";
  for (std::size_t i = 0; i < r.vcs.size(); ++i) {
    const VcId id = r.vcs[i];
    const auto mbps = [](double cps) { return cps * 424.0 / 1e6; };
    const auto it = r.log.totals.find(id);
    const VcTotals t = it == r.log.totals.end() ? VcTotals{} : it->second;
    os << std::setw(2) << id << "  " << std::setprecision(3) << std::setw(11) << mbps(r.oracle.at(i)) << "  "
       << std::setw(11) << mbps(h.steady_throughput.at(i)) << "  " << std::setw(13);
    if (h.time_to_90.at(i)) {
      os << static_cast<double>(*h.time_to_90.at(i)) / 1000.0;
    } else {
      os << "never";
    }
    double mean_burst = 0.0;
    for (auto b : t.burst_response_times) mean_burst += static_cast<double>(b);
    if (!t.burst_response_times.empty()) mean_burst /= static_cast<double>(t.burst_response_times.size());
    os << "  " << std::setw(9) << t.delivered << "  " << std::setprecision(6) << std::setw(8) << t.clr(0) << "  "
       << std::setw(8) << t.clr(1) << "  " << std::setprecision(1) << std::setw(11) << t.ctd_mean << "  "
       << std::setw(10) << t.ctd_max << "  " << std::setw(10) << t.cdv_peak_to_peak << "  " << std::setw(6)
       << t.burst_response_times.size() << "  " << std::setprecision(3) << std::setw(22) << mean_burst / 1000.0
       << '\n';
  }
  os << "\n# configuration\n" << r.config_echo;
  return os.str();
}

}  // namespace abrsim

// Acceptance run: one PASS/FAIL line per criterion, with the measured
// values. Exits non-zero when a criterion fails that is not listed in
// --known-failures (comma separated numbers).

#include "abrsim/fairness.hpp"
#include "abrsim/gcra.hpp"
#include "abrsim/harness.hpp"
#include "abrsim/network.hpp"
#include "abrsim/topology.hpp"
#include "oracles.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <numeric>
#include <set>
#include <sstream>

using namespace abrsim;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

/// Every simulated scenario is recorded so criterion 10 can replay it.
std::vector<std::pair<std::string, ScenarioConfig>> g_replay;

RunReport run_recorded(const std::string& label, const ScenarioConfig& cfg) {
  g_replay.emplace_back(label, cfg);
  return run_scenario(cfg);
}

ScenarioConfig parking_lot3(SchemeKind k) {
  ScenarioConfig cfg = build_parking_lot(3, Rate::from_mbps(150), 100);
  cfg.scheme = k;
  cfg.duration = 2'000'000;
  return cfg;
}

ScenarioConfig bottleneck4(SchemeKind k, SimTime duration) {
  ScenarioConfig cfg = build_chain(2, 4, Rate::from_mbps(150), 100);
  cfg.scheme = k;
  cfg.duration = duration;
  cfg.params.target_utilization = 0.9;
  cfg.params.delta = 0.1;
  return cfg;
}

std::vector<const PortSample*> samples_of(const MetricsLog& log, const std::string& port, SimTime from) {
  std::vector<const PortSample*> out;
  for (const auto& s : log.ports) {
    if (s.port == port && s.time > from) out.push_back(&s);
  }
  return out;
}

SimTime steady_start(SimTime end) {
  return end - static_cast<SimTime>(static_cast<double>(end) * kSteadyStateFraction);
}

// ------------------------------------------------------------- criteria

Outcome c1_figure3() {
  const auto t0 = Clock::now();
  const auto x = max_min(allocation_problem(build_figure3()));
  const double dt = seconds_since(t0);
  const auto mbps = [](long long m) { return Rate::from_mbps(m).exact(); };
  const bool exact = x == AllocationVector{mbps(50), mbps(50), mbps(50), mbps(100)};
  std::ostringstream d;
  d << "allocation (";
  for (std::size_t i = 0; i < x.size(); ++i) d << (i ? ", " : "") << to_double(x[i] * 424 / 1'000'000);
  d << ") Mbps, exact=" << (exact ? "yes" : "no") << ", " << dt << " s";
  return {exact && dt < 1.0, d.str()};
}

Outcome c2_oracle_equivalence() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(2024);
  int mismatches = 0;
  for (int k = 0; k < 1000; ++k) {
    const auto p = test::random_problem(rng, 6, 8);
    if (max_min(p) != test::progressive_filling(p)) ++mismatches;
  }
  const double dt = seconds_since(t0);
  std::ostringstream d;
  d << mismatches << " mismatches in 1000 random problems, " << dt << " s";
  return {mismatches == 0 && dt < 30.0, d.str()};
}

Outcome c3_mit_convergence() {
  std::mt19937_64 rng(77);
  int violations = 0;
  std::size_t worst = 0;
  for (int k = 0; k < 10'000; ++k) {
    const std::size_t n = 2 + rng() % 19;
    std::vector<BigRational> rates;
    for (std::size_t i = 0; i < n; ++i) rates.emplace_back(static_cast<long long>(1 + rng() % 1000));
    const BigRational bw(static_cast<long long>(1 + rng() % 10'000));
    const auto r = mit_fair_share_detailed(bw, rates);
    worst = std::max(worst, r.recomputations);
    if (r.recomputations > 2) ++violations;
  }
  std::ostringstream d;
  d << violations << " of 10000 instances needed more than 2 recomputations (worst " << worst << ")";
  return {violations == 0, d.str()};
}

Outcome c4_gcra() {
  std::mt19937_64 rng(4);
  int bad = 0;
  for (int trial = 0; trial < 5000; ++trial) {
    const std::int64_t pcr = 1000 + static_cast<std::int64_t>(rng() % 400'000);
    const std::int64_t scr = 1 + static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(pcr - 1));
    const std::int64_t mbs = 1 + static_cast<std::int64_t>(rng() % 1000);
    Policer pol(TrafficContract::make(Rate(pcr), Rate(scr), Rate(0), mbs), PoliceAction::Drop);
    const Micros gap = Rate(pcr).interval();
    std::int64_t admitted = 0;
    for (std::int64_t k = 0; k <= mbs; ++k) {
      Cell c = make_data_cell(1, 0);
      if (pol.police(c, gap * k) == PoliceResult::Admit) ++admitted;
    }
    if (admitted != mbs) ++bad;
  }
  GcraState early(Micros(100), Micros(10)), late(Micros(100), Micros(10));
  gcra_check(early, 0);
  gcra_check(late, 0);
  const bool ten = gcra_check(early, 90) == Conformance::Conforming;
  const bool eleven = gcra_check(late, 89) == Conformance::NonConforming;
  std::ostringstream d;
  d << bad << " of 5000 contracts admitted other than MBS cells; -10 us conforming=" << (ten ? "yes" : "no")
    << ", -11 us non-conforming=" << (eleven ? "yes" : "no");
  return {bad == 0 && ten && eleven, d.str()};
}

Outcome c5_credit_zero_loss() {
  const auto t0 = Clock::now();
  std::uint64_t dropped = 0;
  int runs = 0;
  for (SchemeKind k : {SchemeKind::CreditStatic, SchemeKind::CreditAdaptive}) {
    for (int topo = 0; topo < 2; ++topo) {
      for (bool bursty : {false, true}) {
        for (std::uint64_t seed = 1; seed <= 20; ++seed) {
          ScenarioConfig cfg = topo == 0 ? build_parking_lot(3, Rate::from_mbps(150), 100) : build_figure3();
          cfg.scheme = k;
          cfg.duration = 50'000;
          cfg.seed = seed;
          for (auto& v : cfg.vcs) {
            v.start_jitter = 1000;
            if (bursty) {
              v.source = SourceModel::bursty(v.id, 10 + 15 * v.id, 400, BurstLoop::Open);
              v.source.random_idle = true;
            }
          }
          std::ostringstream label;
          label << "credit " << to_string(k) << (topo == 0 ? " parking_lot" : " figure3")
                << (bursty ? " bursty" : " persistent") << " seed " << seed;
          dropped += run_recorded(label.str(), cfg).headline.total_loss;
          ++runs;
        }
      }
    }
  }
  const double dt = seconds_since(t0);
  std::ostringstream d;
  d << dropped << " cells dropped over " << runs << " runs, " << dt << " s";
  return {dropped == 0 && dt < 60.0, d.str()};
}

Outcome c6_beat_down() {
  const auto t0 = Clock::now();
  // Forced marking: one vc across three switch outputs (L1, L2, egress).
  ScenarioConfig forced = build_chain(3, 1, Rate::from_mbps(150), 100);
  forced.scheme = SchemeKind::EfciPrca;
  forced.params.forced_efci_probability = 0.1;
  forced.params.initial_acr_fraction = 1.0;
  forced.duration = 100'000;
  std::uint64_t delivered = 0, marked = 0;
  while (delivered < 100'000) {
    const auto r = run_recorded("forced marking " + std::to_string(forced.duration), forced);
    delivered = r.log.totals.at(1).delivered;
    marked = r.log.totals.at(1).efci_delivered;
    forced.duration *= 2;
  }
  const double p = beat_down_probability(0.1, 3);
  const double frac = static_cast<double>(marked) / static_cast<double>(delivered);
  const double sigma = std::sqrt(p * (1 - p) / static_cast<double>(delivered));
  const bool forced_ok = std::abs(frac - p) <= 3 * sigma;

  const auto prca = run_recorded("parking_lot efci_prca", parking_lot3(SchemeKind::EfciPrca));
  const auto eprca = run_recorded("parking_lot eprca", parking_lot3(SchemeKind::Eprca));
  const double f_prca = prca.headline.steady_state_fairness.value_or(0.0);
  const double f_eprca = eprca.headline.steady_state_fairness.value_or(0.0);
  const double dt = seconds_since(t0);

  std::ostringstream d;
  d << "marked fraction " << frac << " vs " << p << " +/- " << 3 * sigma << " (" << delivered
    << " cells); PRCA fairness " << f_prca << " (need < 0.9); EPRCA fairness " << f_eprca << " (need >= 0.95); "
    << dt << " s";
  return {forced_ok && f_prca < 0.9 && f_eprca >= 0.95 && dt < 120.0, d.str()};
}

Outcome c7_eprca_convergence() {
  ScenarioConfig cfg = parking_lot3(SchemeKind::Eprca);
  const auto r = run_recorded("parking_lot eprca (convergence)", cfg);
  bool within = true;
  std::ostringstream d;
  d << "steady/oracle (";
  for (std::size_t i = 0; i < r.vcs.size(); ++i) {
    const double ratio = r.headline.steady_throughput[i] / r.oracle[i];
    within = within && std::abs(ratio - 1.0) <= 0.10;
    d << (i ? ", " : "") << ratio;
  }
  const double f = r.headline.steady_state_fairness.value_or(0.0);
  d << "), fairness " << f;
  return {within && f >= 0.95, d.str()};
}

/// Microseconds from `start` until the late vc first carries 90% of what the
/// other vcs average over the steady state; nullopt if it never does.
std::optional<SimTime> late_ramp(const RunReport& r, VcId late, SimTime start) {
  const SimTime from = steady_start(r.log.end);
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& row : r.log.rows) {
    if (row.vc != late && row.time > from) sum += row.throughput, ++n;
  }
  if (n == 0) return std::nullopt;
  const double share = sum / static_cast<double>(n);
  for (const auto& row : r.log.rows) {
    if (row.vc == late && row.time > start && row.throughput >= 0.9 * share) return row.time - start;
  }
  return std::nullopt;
}

Outcome c8_osu_equilibrium() {
  ScenarioConfig cfg = bottleneck4(SchemeKind::Osu, 2'000'000);
  const auto r = run_recorded("bottleneck osu", cfg);
  const auto steady = samples_of(r.log, "L1", steady_start(r.log.end));
  double cells = 0.0, queue = 0.0, span = 0.0;
  SimTime prev = steady_start(r.log.end);
  for (const auto* s : steady) {
    cells += static_cast<double>(s->input_cells);
    queue += s->queue_mean * static_cast<double>(s->time - prev);
    span += static_cast<double>(s->time - prev);
    prev = s->time;
  }
  const double capacity = cfg.links[0].rate.cells_per_second() * span / kTicksPerSecond;
  const double util = span > 0 ? cells / capacity : 0.0;
  const double mean_queue = span > 0 ? queue / span : 0.0;
  const bool band = util >= 0.81 && util <= 0.99 && mean_queue <= 5.0;

  const SimTime start = 500'000;
  std::optional<SimTime> ramp[2];
  const SchemeKind kinds[2] = {SchemeKind::Osu, SchemeKind::Eprca};
  for (int i = 0; i < 2; ++i) {
    ScenarioConfig late = bottleneck4(kinds[i], 1'500'000);
    late.metric_interval = 1000;
    late.vcs[3].source = SourceModel::staggered(4, start);
    const auto lr = run_recorded(std::string("late start ") + std::string(to_string(kinds[i])), late);
    ramp[i] = late_ramp(lr, 4, start);
  }
  const auto show = [](const std::optional<SimTime>& t) {
    return t ? std::to_string(static_cast<double>(*t) / 1000.0) + " ms" : std::string("never");
  };
  const bool faster = ramp[0] && (!ramp[1] || *ramp[0] < *ramp[1]);

  std::ostringstream d;
  d << "utilization " << util << " (need 0.81..0.99), mean queue " << mean_queue
    << " cells (need <= 5); late vc to 90% of share: osu " << show(ramp[0]) << ", eprca " << show(ramp[1]);
  return {band && faster, d.str()};
}

Outcome c9_capc() {
  CapcSwitchState st;
  st.fair_share = 12345.678;
  const bool fixed = capc_update(st, 1.0).fair_share == st.fair_share;

  ScenarioConfig cfg = build_chain(2, 4, Rate::from_mbps(150), 100);
  cfg.scheme = SchemeKind::Capc;
  cfg.duration = 1'000'000;
  cfg.metric_interval = 1000;
  const auto r = run_recorded("bottleneck capc", cfg);
  // Aggregate input rate per metric interval, grouped in 100 ms windows
  // that start after the first round trip.
  const SimTime rtt = 2 * (cfg.links[0].delay + 2 * cfg.access_delay);
  std::vector<double> amplitude;
  double lo = 0, hi = 0;
  SimTime window_end = rtt + 100'000;
  bool any = false;
  for (const auto* s : samples_of(r.log, "L1", rtt)) {
    if (s->time > window_end) {
      amplitude.push_back(hi - lo);
      window_end += 100'000;
      any = false;
    }
    const double rate = static_cast<double>(s->input_cells) * kTicksPerSecond / static_cast<double>(cfg.metric_interval);
    if (!any) lo = hi = rate, any = true;
    lo = std::min(lo, rate);
    hi = std::max(hi, rate);
  }
  if (any) amplitude.push_back(hi - lo);
  bool decreasing = amplitude.size() >= 2;
  for (std::size_t i = 1; i < amplitude.size(); ++i) decreasing = decreasing && amplitude[i] < amplitude[i - 1];

  std::ostringstream d;
  d << "z=1 fixed point exact=" << (fixed ? "yes" : "no") << "; amplitude per 100 ms window (cells/s):";
  for (double a : amplitude) d << ' ' << a;
  return {fixed && decreasing, d.str()};
}

Outcome c10_determinism() {
  int differing = 0, broken = 0;
  std::string first_bad;
  for (const auto& [label, cfg] : g_replay) {
    const auto a = run_scenario(cfg);
    const auto b = run_scenario(cfg);
    if (a.csv != b.csv) {
      ++differing;
      if (first_bad.empty()) first_bad = label;
    }
    if (!a.log.conservation_ok) {
      ++broken;
      if (first_bad.empty()) first_bad = label;
    }
  }
  std::ostringstream d;
  d << g_replay.size() << " scenarios replayed: " << differing << " with differing metrics.csv, " << broken
    << " with a conservation failure";
  if (!first_bad.empty()) d << " (first: " << first_bad << ")";
  return {differing == 0 && broken == 0, d.str()};
}

std::set<int> parse_list(const std::string& s) {
  std::set<int> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.insert(std::stoi(item));
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  std::string known;
  std::string only;
  app.add_option("--known-failures", known, "criteria expected to fail, e.g. 3,6");
  app.add_option("--only", only, "run just these criteria (10 replays whatever ran before it)");
  CLI11_PARSE(app, argc, argv);
  const std::set<int> expected = parse_list(known);
  const std::set<int> selected = parse_list(only);

  using Fn = Outcome (*)();
  const std::pair<const char*, Fn> criteria[] = {
      {"max-min worked example", c1_figure3},
      {"oracle equivalence", c2_oracle_equivalence},
      {"MIT iteration convergence", c3_mit_convergence},
      {"GCRA conformance", c4_gcra},
      {"zero loss under credits", c5_credit_zero_loss},
      {"beat-down reproduction", c6_beat_down},
      {"EPRCA convergence", c7_eprca_convergence},
      {"OSU/TUB equilibrium", c8_osu_equilibrium},
      {"CAPC stationarity", c9_capc},
      {"determinism and conservation", c10_determinism},
  };

  int unexpected = 0;
  for (int i = 0; i < 10; ++i) {
    const int id = i + 1;
    if (!selected.empty() && !selected.contains(id)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s criterion %d (%s): %s\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass && !expected.contains(id)) ++unexpected;
  }
  return unexpected == 0 ? 0 : 1;
}

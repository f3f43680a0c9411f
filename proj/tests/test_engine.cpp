#include "abrsim/errors.hpp"
#include "abrsim/event_queue.hpp"
#include "abrsim/harness.hpp"
#include "abrsim/link.hpp"
#include "abrsim/network.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <map>
#include <random>
#include <sstream>

using namespace abrsim;

namespace {

std::uint32_t tag_of(const Event& e) { return std::get<TimerFire>(e.kind).tag; }

Event timer(SimTime at, std::uint32_t tag) { return Event{at, 0, TimerFire{TimerOwner::Test, 0, tag}}; }

}  // namespace

TEST_SUITE("engine") {
  TEST_CASE("events leave in time order") {
    EventQueue q;
    q.schedule(timer(5, 1));
    q.schedule(timer(3, 2));
    CHECK(q.pop().at == 3);
    CHECK(q.now() == 3);
    CHECK(q.pop().at == 5);
    CHECK(q.empty());
  }

  TEST_CASE("simultaneous events keep insertion order") {
    EventQueue q;
    q.schedule(timer(7, 'A'));
    q.schedule(timer(7, 'B'));
    CHECK(tag_of(q.pop()) == 'A');
    CHECK(tag_of(q.pop()) == 'B');
  }

  TEST_CASE("scheduling before the clock is rejected") {
    EventQueue q;
    q.advance_to(4);
    CHECK_THROWS_AS(q.schedule(timer(2, 0)), SchedulingInPast);
    CHECK_NOTHROW(q.schedule(timer(4, 0)));
  }

  TEST_CASE("random schedules pop sorted by (time, insertion)") {
    std::mt19937_64 rng(7);
    EventQueue q;
    std::vector<std::pair<SimTime, std::uint32_t>> expected;
    for (std::uint32_t i = 0; i < 2000; ++i) {
      SimTime t = rng() % 50;
      q.schedule(timer(t, i));
      expected.emplace_back(t, i);
    }
    std::stable_sort(expected.begin(), expected.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    for (const auto& [t, tag] : expected) {
      Event e = q.pop();
      REQUIRE(e.at == t);
      REQUIRE(tag_of(e) == tag);
    }
  }

  TEST_CASE("link transmit: serialization plus propagation") {
    Link fast("L", Rate(1'000'000), 0);
    CHECK(fast.transmit(0) == 1);

    Link slow("L", Rate(1'000'000), 1000);
    CHECK(slow.transmit(0) == 1001);
    CHECK(slow.transmit(0) == 1002);  // waits for the first cell's slot
  }

  TEST_CASE("link transmit: fractional cell times accumulate exactly") {
    // 3 cells per 10 us: cell time 10/3 us.
    Link l("L", Rate(300'000), 0);
    CHECK(l.transmit(0) == 4);   // 3.33 -> 4
    CHECK(l.transmit(0) == 7);   // 6.67 -> 7
    CHECK(l.transmit(0) == 10);  // exactly 10
    CHECK(l.exact_free_time() == Micros(10));
  }

  TEST_CASE("empty network delivers nothing") {
    ScenarioConfig cfg = test::single_link(SchemeKind::Eprca, 1, 1000);
    cfg.vcs.front().source = SourceModel::staggered(1, 5000);  // never starts within the run
    Simulation sim(cfg);
    auto log = sim.run();
    CHECK(log.totals.at(1).delivered == 0);
    CHECK(log.totals.at(1).emitted == 0);
    CHECK(log.end == 1000);
  }

  TEST_CASE("one source at 10 cells/s for 1 s delivers 10 cells") {
    ScenarioConfig cfg = test::single_link(SchemeKind::Becn, 1, 1'000'000, Rate(1000), 100);
    VcSpec& v = cfg.vcs.front();
    v.pcr = Rate(10);
    v.access_rate = Rate(1000);
    cfg.params.initial_acr_fraction = 1.0;
    Simulation sim(cfg);
    auto log = sim.run();
    CHECK(log.totals.at(1).delivered == 10);
  }

  TEST_CASE("identical seed and configuration give identical runs") {
    ScenarioConfig cfg = test::parking_lot(SchemeKind::EfciPrca, 3, 200'000);
    cfg.params.forced_efci_probability = 0.05;
    cfg.vcs[0].source = SourceModel::bursty(1, 50, 2000, BurstLoop::Open);
    cfg.vcs[0].source.random_idle = true;
    auto a = run_scenario(cfg);
    auto b = run_scenario(cfg);
    CHECK(a.csv == b.csv);
    Simulation s1(cfg), s2(cfg);
    s1.run();
    s2.run();
    CHECK(s1.trace_hash() == s2.trace_hash());
    CHECK(s1.events_processed() == s2.events_processed());

    cfg.seed = 2;
    Simulation s3(cfg);
    s3.run();
    CHECK(s3.trace_hash() != s1.trace_hash());
  }

  TEST_CASE("conservation holds at every event for every scheme") {
    const SchemeKind schemes[] = {SchemeKind::EfciPrca, SchemeKind::Eprca,        SchemeKind::Osu,
                                  SchemeKind::OsuCount, SchemeKind::Capc,         SchemeKind::Becn,
                                  SchemeKind::CreditStatic, SchemeKind::CreditAdaptive};
    for (SchemeKind k : schemes) {
      CAPTURE(to_string(k));
      ScenarioConfig cfg = build_figure3();
      cfg.scheme = k;
      cfg.duration = 30'000;
      for (auto& l : cfg.links) {
        if (!is_credit(k)) l.buffer = 200;  // force some drops in the rate schemes
      }
      cfg.vcs[1].source = SourceModel::bursty(2, 40, 500, BurstLoop::Closed);
      Simulation sim(cfg);
      std::uint64_t checked = 0;
      bool ok = true;
      sim.set_event_hook([&](const Event&) {
        if (++checked % 97 != 0) return;
        for (const auto& v : cfg.vcs) ok = ok && sim.conservation(v.id).holds();
      });
      auto log = sim.run();
      CHECK(ok);
      CHECK(log.conservation_ok);
      for (const auto& v : cfg.vcs) CHECK(sim.conservation(v.id).holds());
    }
  }

  TEST_CASE("no link delivers more than its rate allows") {
    ScenarioConfig cfg = test::parking_lot(SchemeKind::Eprca, 3, 100'000);
    cfg.params.air_fraction = 0.5;  // aggressive sources keep the trunk saturated
    Simulation sim(cfg);
    auto ports = sim.ports();
    std::map<PortIndex, std::vector<SimTime>> arrivals;
    sim.set_event_hook([&](const Event& e) {
      if (const auto* a = std::get_if<CellArrival>(&e.kind)) arrivals[a->link].push_back(e.at);
    });
    sim.run();
    std::size_t checked_ports = 0;
    for (const auto& [pi, times] : arrivals) {
      const auto* spec = cfg.find_link(ports.at(pi).name);
      if (spec == nullptr) continue;
      ++checked_ports;
      const double rate = spec->rate.cells_per_second() / kTicksPerSecond;
      for (std::size_t span : {1u, 2u, 7u, 50u, 1000u}) {
        for (std::size_t k = 0; k + span < times.size(); ++k) {
          const double window = static_cast<double>(times[k + span] - times[k]);
          REQUIRE(static_cast<double>(span + 1) <= std::ceil(window * rate) + 1.0);
        }
      }
    }
    CHECK(checked_ports == 2);
  }

  TEST_CASE("a saturated link runs at its full rate") {
    ScenarioConfig cfg = test::single_link(SchemeKind::CreditStatic, 2, 50'000);
    Simulation sim(cfg);
    sim.run();
    for (const auto& p : sim.ports()) {
      if (p.name != "L1") continue;
      const double expected = cfg.links[0].rate.cells_per_second() * 0.05;
      CHECK(static_cast<double>(p.cells_transmitted) == doctest::Approx(expected).epsilon(0.01));
    }
  }
}

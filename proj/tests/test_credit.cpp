#include "abrsim/credit.hpp"
#include "abrsim/errors.hpp"
#include "abrsim/harness.hpp"
#include "abrsim/network.hpp"
#include "support.hpp"

#include <doctest.h>

#include <numeric>

using namespace abrsim;

TEST_SUITE("credit") {
  TEST_CASE("static credit covers one round trip") {
    CHECK(static_credit_size(Rate(1'000'000), 500) == 1000);
    CHECK(static_credit_size(Rate(1'000'000), 0) == 1);
    CHECK(static_credit_size(Link("L", Rate(1'000'000), 500)) == 1000);
    // 155e6/424 cells/s over 2 x 100 us = 73.1 cells, rounded up.
    CHECK(static_credit_size(Rate::from_mbps(155), 100) == 74);
    CHECK(static_credit_size(Rate(3), 1) == 1);
  }

  TEST_CASE("send gate consumes credits") {
    CreditState st;
    st.register_vc(1, 1);
    CHECK(credit_send_gate(st, 1) == Gate::Permitted);
    CHECK(st.at(1).balance == 0);
    CHECK(st.at(1).cells_sent == 1);
    CHECK(credit_send_gate(st, 1) == Gate::Blocked);
    CHECK(st.at(1).cells_sent == 1);
    CHECK_THROWS_AS(credit_send_gate(st, 9), UnknownVc);
  }

  TEST_CASE("1000 credits allow exactly 1000 cells without returns") {
    CreditState st;
    st.register_vc(1, 1000);
    int sent = 0;
    while (credit_send_gate(st, 1) == Gate::Permitted) ++sent;
    CHECK(sent == 1000);
    st.issue(1, 10);
    CHECK(credit_send_gate(st, 1) == Gate::Blocked);  // still on the wire
    st.deliver(1, 10);
    CHECK(credit_send_gate(st, 1) == Gate::Permitted);
    const auto& v = st.at(1);
    CHECK(static_cast<std::int64_t>(v.credits_issued - v.credits_consumed) - v.credits_in_flight == v.balance);
  }

  TEST_CASE("resync reissues exactly the lost cells") {
    CreditState st;
    st.register_vc(1, 0);
    CHECK(resync(st, 1, 500, 500) == 0);
    auto& v = st.at(1);
    v.cells_sent = 500;
    v.cells_received = 490;
    CHECK(resync(st, 1, v.cells_sent, v.cells_received) == 10);
    CHECK(v.balance == 10);
    // Counters are reconciled, so the same loss is not counted twice.
    CHECK(resync(st, 1, v.cells_sent, v.cells_received) == 0);
    v.cells_sent = 510;
    CHECK(resync(st, 1, v.cells_sent, v.cells_received, 10) == 0);
    CHECK_THROWS_AS(resync(st, 1, 10, 11), NegativeLoss);
  }

  TEST_CASE("revocation only takes back unspent credits") {
    CreditState st;
    st.register_vc(1, 5);
    CHECK(credit_send_gate(st, 1) == Gate::Permitted);
    CHECK(st.revoke(1, 10) == 4);
    CHECK(st.at(1).balance == 0);
    CHECK(st.revoke(1, 3) == 0);
    const auto& v = st.at(1);
    CHECK(static_cast<std::int64_t>(v.credits_issued - v.credits_consumed - v.credits_revoked) - v.credits_in_flight ==
          v.balance);
  }

  TEST_CASE("adaptive allocation examples") {
    CHECK(adaptive_allocate({300, 100}, 4000, 10) == std::vector<std::int64_t>{3000, 1000});
    CHECK(adaptive_allocate({7, 7}, 100, 2) == std::vector<std::int64_t>{50, 50});
    CHECK(adaptive_allocate({500, 0, 0, 0}, 1000, 2) == std::vector<std::int64_t>{994, 2, 2, 2});
    CHECK_THROWS_AS(adaptive_allocate({1, 1, 1}, 5, 2), InsufficientBuffer);
  }

  TEST_CASE("adaptive allocation respects floors and the total") {
    std::mt19937_64 rng(8);
    for (int k = 0; k < 5000; ++k) {
      const std::size_t n = 1 + rng() % 8;
      const std::int64_t min_grant = 1 + static_cast<std::int64_t>(rng() % 5);
      const std::int64_t total = static_cast<std::int64_t>(n) * min_grant + static_cast<std::int64_t>(rng() % 5000);
      std::vector<std::uint64_t> usage(n);
      for (auto& u : usage) u = rng() % 3 == 0 ? 0 : rng() % 1000;
      const auto a = adaptive_allocate(usage, total, min_grant);
      REQUIRE(a.size() == n);
      REQUIRE(std::accumulate(a.begin(), a.end(), std::int64_t{0}) <= total);
      for (std::size_t i = 0; i < n; ++i) {
        REQUIRE(a[i] >= min_grant);
        if (usage[i] == 0) REQUIRE(a[i] == min_grant);
        for (std::size_t j = 0; j < n; ++j) {
          if (usage[i] > usage[j]) REQUIRE(a[i] >= a[j]);
        }
      }
    }
  }

  TEST_CASE("credit invariants hold at every event") {
    for (SchemeKind k : {SchemeKind::CreditStatic, SchemeKind::CreditAdaptive}) {
      CAPTURE(to_string(k));
      ScenarioConfig cfg = build_figure3();
      cfg.scheme = k;
      cfg.duration = 40'000;
      cfg.vcs[2].source = SourceModel::bursty(3, 100, 700, BurstLoop::Open);
      Simulation sim(cfg);
      std::vector<std::string> first;
      sim.set_event_hook([&](const Event&) {
        if (first.empty()) first = sim.credit_violations();
      });
      auto log = sim.run();
      CHECK(first.empty());
      if (!first.empty()) MESSAGE(first.front());
      CHECK(log.total_dropped() == 0);
    }
  }

  TEST_CASE("no loss across seeds with random bursty sources") {
    for (std::uint64_t seed = 1; seed <= 8; ++seed) {
      for (SchemeKind k : {SchemeKind::CreditStatic, SchemeKind::CreditAdaptive}) {
        ScenarioConfig cfg = test::parking_lot(k, 3, 30'000);
        cfg.seed = seed;
        for (auto& v : cfg.vcs) {
          v.source = SourceModel::bursty(v.id, 20 + 10 * v.id, 300, BurstLoop::Open);
          v.source.random_idle = true;
          v.start_jitter = 2000;
        }
        auto log = Simulation(cfg).run();
        CHECK(log.total_dropped() == 0);
        CHECK(log.conservation_ok);
      }
    }
  }

  TEST_CASE("one vc with static credits fills the link") {
    ScenarioConfig cfg = test::single_link(SchemeKind::CreditStatic, 1, 50'000);
    cfg.metric_interval = 5000;
    const auto report = run_scenario(cfg);
    const double rate = cfg.links[0].rate.cells_per_second();
    // Skip the first interval, which contains the initial round trip.
    for (const auto& r : report.log.rows) {
      if (r.time <= 5000) continue;
      CHECK(r.throughput >= 0.99 * rate);
    }
  }

  TEST_CASE("a newly active vc under adaptive credits needs an allocation period") {
    ScenarioConfig cfg = test::single_link(SchemeKind::CreditAdaptive, 2, 40'000);
    cfg.metric_interval = 100;
    cfg.vcs[1].source = SourceModel::staggered(2, 20'000);
    const SimTime period = 4 * 2 * cfg.links[0].delay;
    const auto report = run_scenario(cfg);
    const double fair = cfg.links[0].rate.cells_per_second() / 2.0;
    std::optional<SimTime> reached;
    for (const auto& r : report.log.rows) {
      if (r.vc == 2 && r.time > 20'000 && r.throughput >= 0.9 * fair) {
        reached = r.time;
        break;
      }
    }
    REQUIRE(reached);
    MESSAGE("ramp-up " << (*reached - 20'000) << " us, allocation period " << period << " us");
    CHECK(*reached - 20'000 >= period);
  }
}

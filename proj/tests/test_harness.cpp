#include "abrsim/errors.hpp"
#include "abrsim/harness.hpp"
#include "abrsim/network.hpp"
#include "abrsim/topology.hpp"
#include "support.hpp"

#include <doctest.h>

#include <algorithm>
#include <sstream>

using namespace abrsim;

namespace {

bool mentions(const ConfigError& e, const std::string& field) {
  return std::any_of(e.diagnostics().begin(), e.diagnostics().end(),
                     [&](const FieldDiagnostic& d) { return d.field.find(field) != std::string::npos; });
}

}  // namespace

TEST_SUITE("harness") {
  TEST_CASE("parking lot generator") {
    auto three = build_parking_lot(3, Rate::from_mbps(150), 100);
    CHECK(three.switches.size() == 3);
    CHECK(three.links.size() == 2);
    REQUIRE(three.vcs.size() == 3);
    CHECK(three.vcs[0].route == std::vector<LinkId>{"L1", "L2"});
    CHECK(three.vcs[1].route == std::vector<LinkId>{"L1", "L2"});
    CHECK(three.vcs[2].route == std::vector<LinkId>{"L2"});

    auto two = build_parking_lot(2, Rate::from_mbps(150), 100);
    REQUIRE(two.vcs.size() == 2);
    CHECK(two.vcs[0].route == two.vcs[1].route);

    CHECK_THROWS(build_parking_lot(1, Rate::from_mbps(150), 100));
  }

  TEST_CASE("every generated topology is accepted by the oracle") {
    std::vector<ScenarioConfig> all{build_figure3()};
    for (std::size_t n = 2; n <= 8; ++n) all.push_back(build_parking_lot(n, Rate::from_mbps(150), 50));
    for (std::size_t n = 2; n <= 5; ++n) all.push_back(build_chain(n, n + 1, Rate::from_mbps(100), 10));
    for (auto& cfg : all) {
      cfg.duration = 1000;
      CHECK_NOTHROW(cfg.validate());
      const auto p = allocation_problem(cfg);
      CHECK_NOTHROW(p.validate());
      CHECK(max_min(p).size() == cfg.vcs.size());
    }
  }

  TEST_CASE("configuration round trip reproduces the trace") {
    ScenarioConfig cfg = load_config_text(R"(
[scenario]
name = rt
scheme = efci_prca
duration_ms = 50
seed = 7

[topology]
generator = parking_lot
switches = 3

[vc 2]
source = bursty
burst_cells = 40
idle_us = 900

[scheme]
forced_efci_probability = 0.05
)");
    const std::string text = serialize_config(cfg);
    ScenarioConfig again = load_config_text(text);
    CHECK(serialize_config(again) == text);
    Simulation a(cfg), b(again);
    a.run();
    b.run();
    CHECK(a.trace_hash() == b.trace_hash());
  }

  TEST_CASE("invalid scenarios raise ConfigError with field diagnostics") {
    ScenarioConfig cfg = test::parking_lot(SchemeKind::Eprca, 3, 0);
    try {
      run_scenario(cfg);
      FAIL("duration 0 accepted");
    } catch (const ConfigError& e) {
      CHECK(mentions(e, "duration"));
    }

    cfg.duration = 1000;
    cfg.vcs[0].route = {"L9"};
    CHECK_THROWS_AS(cfg.validate(), ConfigError);

    CHECK_THROWS_AS(load_config_text("[scenario]\nduration_ms = 5\nbogus = 1\n[topology]\ngenerator = figure3\n"),
                    ConfigError);
    CHECK_THROWS_AS(load_config_text("[scenario]\nduration_ms = 5\nscheme = nope\n[topology]\ngenerator = figure3\n"),
                    ConfigError);
  }

  TEST_CASE("document set and get") {
    auto doc = ConfigDocument::parse("[scenario]\nscheme = eprca\n[vc 3]\nstart_us = 10\n");
    CHECK(doc.get("scenario.scheme") == "eprca");
    doc.set("scenario.scheme", "osu");
    doc.set("vc.3.start_us", "20");
    doc.set("scheme.rup", "0.1");
    CHECK(doc.get("scenario.scheme") == "osu");
    CHECK(doc.get("vc.3.start_us") == "20");
    CHECK(doc.get("scheme.rup") == "0.1");
    CHECK_FALSE(doc.get("scheme.rdn"));
  }

  TEST_CASE("CSV of an empty log is the header alone") {
    MetricsLog log;
    std::ostringstream out;
    emit_csv(log, out);
    CHECK(out.str() == csv_header() + "\n");
    CHECK(csv_header() == "time,vc,throughput,acr,queue_max,dropped,efci_fraction,fairness_index");
  }

  TEST_CASE("CSV has one row per interval and vc") {
    ScenarioConfig cfg = test::parking_lot(SchemeKind::Eprca, 3, 20'000);
    const auto report = run_scenario(cfg);
    REQUIRE(report.log.rows.size() == 6);
    std::istringstream in(report.csv);
    std::string line;
    std::size_t lines = 0;
    while (std::getline(in, line)) ++lines;
    CHECK(lines == 7);
  }

  TEST_CASE("headline is recomputable from the CSV alone") {
    ScenarioConfig cfg = test::parking_lot(SchemeKind::Eprca, 3, 200'000);
    cfg.metric_interval = 5000;
    const auto report = run_scenario(cfg);
    std::istringstream in(report.csv);
    const auto rows = parse_csv(in);
    const Headline h = headline_from_rows(rows, report.vcs, report.oracle, report.log.end);
    CHECK(h.steady_state_fairness == report.headline.steady_state_fairness);
    CHECK(h.steady_throughput == report.headline.steady_throughput);
    CHECK(h.total_loss == report.headline.total_loss);
    CHECK(h.max_queue == report.headline.max_queue);
    CHECK(h.time_to_90 == report.headline.time_to_90);
  }

  TEST_CASE("malformed CSV is rejected") {
    std::istringstream bad_header("time,vc\n");
    CHECK_THROWS_AS(parse_csv(bad_header), IoError);
    std::istringstream bad_row(csv_header() + "\n1,2,x\n");
    CHECK_THROWS_AS(parse_csv(bad_row), IoError);
  }

  TEST_CASE("report names the CSV version and the headline") {
    ScenarioConfig cfg = test::parking_lot(SchemeKind::CreditStatic, 3, 20'000);
    const auto report = run_scenario(cfg);
    const std::string text = format_report(report);
    CHECK(text.find("csv_version = " + std::to_string(kCsvVersion)) != std::string::npos);
    CHECK(text.find("total_loss") != std::string::npos);
    CHECK(report.headline.total_loss == 0);
  }
}

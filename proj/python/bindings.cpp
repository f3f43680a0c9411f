#include "abrsim/config.hpp"
#include "abrsim/credit.hpp"
#include "abrsim/errors.hpp"
#include "abrsim/fairness.hpp"
#include "abrsim/harness.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace py = pybind11;
using namespace abrsim;

namespace {

// Exact values cross the boundary as "num/den" strings; the Python layer
// turns them into fractions.Fraction.
BigRational parse_big(const std::string& s) { return BigRational(s); }
std::string show_big(const BigRational& r) { return r.str(); }

using LinkArg = std::pair<std::string, std::string>;
using VcArg = std::tuple<std::string, std::vector<std::string>, std::optional<std::string>>;

std::vector<std::string> max_min_text(const std::vector<LinkArg>& links, const std::vector<VcArg>& vcs) {
  AllocationProblem p;
  for (const auto& [id, cap] : links) p.links.push_back({id, parse_big(cap)});
  for (const auto& [id, route, demand] : vcs) {
    AllocationProblem::VcEntry v{id, route, std::nullopt};
    if (demand) v.demand = parse_big(*demand);
    p.vcs.push_back(std::move(v));
  }
  p.validate();
  std::vector<std::string> out;
  for (const auto& x : max_min(p)) out.push_back(show_big(x));
  return out;
}

py::tuple mit_detailed_text(const std::string& bw, const std::vector<std::string>& rates) {
  std::vector<BigRational> r;
  for (const auto& s : rates) r.push_back(parse_big(s));
  const auto res = mit_fair_share_detailed(parse_big(bw), r);
  return py::make_tuple(show_big(res.fair_share), res.recomputations, res.underloading);
}

ScenarioConfig load(const std::string& text, std::optional<std::uint64_t> seed, std::optional<double> duration_ms) {
  ConfigDocument doc = ConfigDocument::parse(text);
  if (seed) doc.set("scenario.seed", std::to_string(*seed));
  if (duration_ms) {
    for (auto& s : doc.sections) {
      if (s.type != "scenario") continue;
      std::erase_if(s.entries, [](const ConfigDocument::Entry& e) { return e.key == "duration_us"; });
    }
    doc.set("scenario.duration_ms", std::to_string(*duration_ms));
  }
  return load_config(doc);
}

py::list oracle_text(const std::string& text) {
  ConfigDocument doc = ConfigDocument::parse(text);
  if (!doc.get("scenario.duration_ms") && !doc.get("scenario.duration_us")) doc.set("scenario.duration_us", "1");
  const ScenarioConfig cfg = load_config(doc);
  const auto x = max_min(allocation_problem(cfg));
  py::list out;
  for (std::size_t i = 0; i < x.size(); ++i) out.append(py::make_tuple(cfg.vcs[i].id, show_big(x[i])));
  return out;
}

py::dict run_text(const std::string& text, std::optional<std::uint64_t> seed, std::optional<double> duration_ms) {
  RunReport r;
  {
    py::gil_scoped_release release;
    r = run_scenario(load(text, seed, duration_ms));
  }
  py::dict d;
  d["vcs"] = r.vcs;
  d["oracle"] = r.oracle;
  d["fairness"] = r.headline.steady_state_fairness;
  d["steady_throughput"] = r.headline.steady_throughput;
  d["total_loss"] = r.headline.total_loss;
  d["max_queue"] = r.headline.max_queue;
  d["time_to_90"] = r.headline.time_to_90;
  d["conservation_ok"] = r.log.conservation_ok;
  d["csv"] = r.csv;
  d["report"] = format_report(r);
  return d;
}

}  // namespace

PYBIND11_MODULE(_abrsim, m) {
  m.doc() = "ABR and credit flow-control simulator core";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DegenerateOptimal>(m, "DegenerateOptimal", PyExc_ValueError);
  py::register_exception<InsufficientBuffer>(m, "InsufficientBuffer", PyExc_ValueError);

  m.def("max_min", &max_min_text, py::arg("links"), py::arg("vcs"));
  m.def("fairness_index",
        py::overload_cast<const std::vector<double>&, const std::vector<double>&>(&fairness_index),
        py::arg("actual"), py::arg("optimal"));
  m.def("mit_fair_share_detailed", &mit_detailed_text, py::arg("link_bw"), py::arg("rates"));
  m.def("beat_down_probability", &beat_down_probability, py::arg("p"), py::arg("hops"));
  m.def(
      "static_credit_size",
      [](std::int64_t cells_per_second, SimTime one_way_delay_us) {
        return static_credit_size(Rate(cells_per_second), one_way_delay_us);
      },
      py::arg("cells_per_second"), py::arg("one_way_delay_us"));
  m.def("adaptive_allocate", &adaptive_allocate, py::arg("usage"), py::arg("total_buffer"),
        py::arg("min_grant") = 2, py::arg("capacity") = 0);
  m.def("oracle", &oracle_text, py::arg("config_text"));
  m.def("run", &run_text, py::arg("config_text"), py::arg("seed") = std::nullopt,
        py::arg("duration_ms") = std::nullopt);
  m.def(
      "serialize", [](const std::string& text) { return serialize_config(load_config_text(text)); },
      py::arg("config_text"));
  m.attr("CSV_VERSION") = kCsvVersion;
}

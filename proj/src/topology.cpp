#include "abrsim/topology.hpp"

#include <stdexcept>
#include <string>

namespace abrsim {
namespace {

std::string sw(std::size_t i) { return "S" + std::to_string(i); }
std::string ln(std::size_t i) { return "L" + std::to_string(i); }

ScenarioConfig series(std::size_t n, Rate rate, SimTime delay) {
  ScenarioConfig cfg;
  for (std::size_t i = 1; i <= n; ++i) cfg.switches.push_back(sw(i));
  for (std::size_t i = 1; i < n; ++i) {
    LinkSpec l;
    l.id = ln(i);
    l.from = sw(i);
    l.to = sw(i + 1);
    l.rate = rate;
    l.delay = delay;
    cfg.links.push_back(l);
  }
  return cfg;
}

VcSpec persistent_vc(VcId id, std::vector<LinkId> route, Rate pcr) {
  VcSpec v;
  v.id = id;
  v.route = std::move(route);
  v.pcr = pcr;
  v.source = SourceModel::persistent(id);
  return v;
}

}  // namespace

ScenarioConfig build_parking_lot(std::size_t n, Rate rate, SimTime delay) {
  if (n < 2) throw std::invalid_argument("parking lot needs at least two switches");
  ScenarioConfig cfg = series(n, rate, delay);
  for (std::size_t i = 1; i <= n; ++i) {
    const std::size_t entry = i <= 2 ? 1 : i - 1;
    std::vector<LinkId> route;
    for (std::size_t l = entry; l < n; ++l) route.push_back(ln(l));
    cfg.vcs.push_back(persistent_vc(static_cast<VcId>(i), std::move(route), rate));
  }
  return cfg;
}

ScenarioConfig build_figure3(Rate rate, SimTime delay) {
  ScenarioConfig cfg = series(4, rate, delay);
  cfg.vcs.push_back(persistent_vc(1, {"L1"}, rate));
  cfg.vcs.push_back(persistent_vc(2, {"L1"}, rate));
  cfg.vcs.push_back(persistent_vc(3, {"L1", "L2"}, rate));
  cfg.vcs.push_back(persistent_vc(4, {"L2", "L3"}, rate));
  return cfg;
}

ScenarioConfig build_chain(std::size_t n, std::size_t n_vcs, Rate rate, SimTime delay) {
  if (n < 2) throw std::invalid_argument("chain needs at least two switches");
  ScenarioConfig cfg = series(n, rate, delay);
  std::vector<LinkId> route;
  for (std::size_t l = 1; l < n; ++l) route.push_back(ln(l));
  for (std::size_t i = 1; i <= n_vcs; ++i) {
    cfg.vcs.push_back(persistent_vc(static_cast<VcId>(i), route, rate));
  }
  return cfg;
}

}  // namespace abrsim

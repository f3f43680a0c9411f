#pragma once

#include "abrsim/config.hpp"
#include "abrsim/topology.hpp"

#include <cstddef>

namespace abrsim::test {

/// One trunk link shared by `n_vcs` persistent vcs.
inline ScenarioConfig single_link(SchemeKind scheme, std::size_t n_vcs, SimTime duration,
                                  Rate rate = Rate::from_mbps(150), SimTime delay = 100) {
  ScenarioConfig cfg = build_chain(2, n_vcs, rate, delay);
  cfg.scheme = scheme;
  cfg.duration = duration;
  return cfg;
}

inline ScenarioConfig parking_lot(SchemeKind scheme, std::size_t n, SimTime duration) {
  ScenarioConfig cfg = build_parking_lot(n, Rate::from_mbps(150), 100);
  cfg.scheme = scheme;
  cfg.duration = duration;
  return cfg;
}

}  // namespace abrsim::test

#pragma once

// Topology generators. Each returns a ScenarioConfig whose switches, links
// and vcs are filled in; every other field keeps its default.

#include "abrsim/config.hpp"

#include <cstddef>

namespace abrsim {

/// n switches S1..Sn in series joined by L1..L(n-1). VC 1 and VC 2 enter at
/// S1, VC i (i >= 3) enters at S(i-1); all leave after Sn, so every VC
/// shares L(n-1). For n = 2 both VCs enter at S1. Requires n >= 2.
ScenarioConfig build_parking_lot(std::size_t n_switches, Rate link_rate, SimTime link_delay);

/// Four switches joined by L1, L2, L3. VCs 1 and 2 use L1, VC 3 uses L1 and
/// L2, VC 4 uses L2 and L3.
ScenarioConfig build_figure3(Rate link_rate = Rate::from_mbps(150), SimTime link_delay = 100);

/// n switches in series with `n_vcs` VCs that all cross every link.
ScenarioConfig build_chain(std::size_t n_switches, std::size_t n_vcs, Rate link_rate,
                           SimTime link_delay);

}  // namespace abrsim

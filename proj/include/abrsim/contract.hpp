#pragma once

#include "abrsim/cell.hpp"
#include "abrsim/units.hpp"

#include <optional>
#include <string>
#include <vector>

namespace abrsim {

/// Declared per-VC traffic parameters. Rates in cells/s; tolerances exact.
struct TrafficContract {
  Rate pcr;
  std::optional<Rate> scr;
  Rate mcr{0};
  std::optional<std::int64_t> mbs;
  Micros cdvt{0};
  /// Burst tolerance. When mbs and scr are both given this is derived exactly
  /// from them by make(); otherwise it is whatever the caller set.
  Micros bt{0};

  /// Validates and fills bt. Throws InvalidContract.
  static TrafficContract make(Rate pcr, std::optional<Rate> scr = std::nullopt,
                              Rate mcr = Rate{0}, std::optional<std::int64_t> mbs = std::nullopt,
                              Micros cdvt = Micros{0});

  void validate() const;
};

/// (mbs - 1) * (1/scr - 1/pcr) without rounding.
Micros bt_exact(std::int64_t mbs, Rate scr, Rate pcr);

/// Burst tolerance rounded down to whole ticks.
/// Throws InvalidContract when scr > pcr, scr <= 0 or mbs < 1.
SimTime bt_from_mbs(std::int64_t mbs, Rate scr, Rate pcr);

using NodeId = std::string;
using LinkId = std::string;

struct Hop {
  NodeId switch_id;
  LinkId out_link;
};

/// Route of one VC through the switch fabric.
struct VcPath {
  VcId vc = 0;
  NodeId source;
  NodeId destination;
  std::vector<Hop> hops;
};

}  // namespace abrsim

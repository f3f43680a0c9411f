#pragma once

#include "abrsim/units.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace abrsim {

/// A static max-min problem: links with capacities and the set of links each
/// VC crosses. Demands cap individual VCs; an absent demand is unbounded.
struct AllocationProblem {
  struct LinkEntry {
    std::string id;
    BigRational capacity;
  };
  struct VcEntry {
    std::string id;
    std::vector<std::string> links;
    std::optional<BigRational> demand;
  };

  std::vector<LinkEntry> links;
  std::vector<VcEntry> vcs;

  /// Throws std::invalid_argument on unknown links, empty routes or
  /// non-positive capacities.
  void validate() const;
};

/// Per-VC rates in the order of AllocationProblem::vcs.
using AllocationVector = std::vector<BigRational>;

/// Max-min fair allocation. Repeatedly finds the most constrained link (or a
/// demand cap that binds first), gives every unfrozen VC on it the equal
/// share, removes those VCs and reduces the capacities they used. Ties go to
/// the lowest link id.
AllocationVector max_min(const AllocationProblem& problem);

/// Jain's index on allocations normalized by the optimum:
/// (sum x)^2 / (n sum x^2), x_i = actual_i / optimal_i.
/// Throws DegenerateOptimal if an optimal entry is zero, and
/// std::invalid_argument on a length mismatch or an all-zero actual vector.
double fairness_index(const std::vector<double>& actual, const std::vector<double>& optimal);
double fairness_index(const AllocationVector& actual, const AllocationVector& optimal);

struct MitResult {
  BigRational fair_share;
  std::size_t recomputations = 0;  // times the share was recomputed after the first
  std::size_t underloading = 0;    // VCs below the final share
};

/// Iterative fair-share computation of the MIT explicit-rate switch: start
/// at bandwidth / n, then whenever the set of VCs below the share grows,
/// recompute (bandwidth - their total) / (n - their count). Stops once the
/// set and the share are unchanged. If every VC ends up below the share
/// the link is not a bottleneck and the last share is returned.
MitResult mit_fair_share_detailed(const BigRational& link_bw, const std::vector<BigRational>& rates);
BigRational mit_fair_share(const BigRational& link_bw, const std::vector<BigRational>& rates);
double mit_fair_share(double link_bw, const std::vector<double>& rates);

/// 1 - (1 - p)^hops: chance that at least one of `hops` independent switches
/// marks a cell.
double beat_down_probability(double p, unsigned hops);

}  // namespace abrsim

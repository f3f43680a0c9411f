#include "abrsim/errors.hpp"
#include "abrsim/fairness.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

namespace abrsim {

void AllocationProblem::validate() const {
  std::map<std::string, bool> known;
  for (const auto& l : links) {
    if (l.capacity <= 0) throw std::invalid_argument("link " + l.id + ": capacity must be positive");
    if (!known.emplace(l.id, true).second) throw std::invalid_argument("duplicate link " + l.id);
  }
  for (const auto& v : vcs) {
    if (v.links.empty()) throw std::invalid_argument("vc " + v.id + " crosses no link");
    for (const auto& l : v.links) {
      if (!known.contains(l)) throw std::invalid_argument("vc " + v.id + " uses unknown link " + l);
    }
    if (v.demand && *v.demand < 0) throw std::invalid_argument("vc " + v.id + ": negative demand");
  }
}

AllocationVector max_min(const AllocationProblem& problem) {
  problem.validate();
  const std::size_t nl = problem.links.size();
  const std::size_t nv = problem.vcs.size();

  // Links visited in ascending id order so ties resolve deterministically.
  std::vector<std::size_t> link_order(nl);
  std::iota(link_order.begin(), link_order.end(), 0);
  std::sort(link_order.begin(), link_order.end(),
            [&](std::size_t a, std::size_t b) { return problem.links[a].id < problem.links[b].id; });

  std::map<std::string, std::size_t> link_index;
  for (std::size_t i = 0; i < nl; ++i) link_index[problem.links[i].id] = i;

  std::vector<std::vector<std::size_t>> vc_links(nv);
  std::vector<std::vector<std::size_t>> link_vcs(nl);
  for (std::size_t v = 0; v < nv; ++v) {
    for (const auto& l : problem.vcs[v].links) {
      auto li = link_index.at(l);
      if (std::find(vc_links[v].begin(), vc_links[v].end(), li) != vc_links[v].end()) continue;
      vc_links[v].push_back(li);
      link_vcs[li].push_back(v);
    }
  }

  std::vector<BigRational> remaining(nl);
  for (std::size_t i = 0; i < nl; ++i) remaining[i] = problem.links[i].capacity;
  std::vector<std::size_t> unfrozen_on(nl);
  for (std::size_t i = 0; i < nl; ++i) unfrozen_on[i] = link_vcs[i].size();

  AllocationVector rate(nv);
  std::vector<bool> frozen(nv, false);
  std::size_t left = nv;

  auto freeze = [&](std::size_t v, const BigRational& r) {
    frozen[v] = true;
    rate[v] = r;
    --left;
    for (auto li : vc_links[v]) {
      remaining[li] -= r;
      --unfrozen_on[li];
    }
  };

  while (left > 0) {
    std::optional<std::size_t> tightest;
    BigRational level;
    for (auto li : link_order) {
      if (unfrozen_on[li] == 0) continue;
      BigRational share = remaining[li] / unfrozen_on[li];
      if (!tightest || share < level) {
        tightest = li;
        level = share;
      }
    }

    std::optional<BigRational> smallest_demand;
    for (std::size_t v = 0; v < nv; ++v) {
      if (frozen[v] || !problem.vcs[v].demand) continue;
      if (!smallest_demand || *problem.vcs[v].demand < *smallest_demand) {
        smallest_demand = *problem.vcs[v].demand;
      }
    }

    if (smallest_demand && *smallest_demand <= level) {
      // A demand cap binds before any link saturates.
      BigRational cap = *smallest_demand;
      for (std::size_t v = 0; v < nv; ++v) {
        if (!frozen[v] && problem.vcs[v].demand && *problem.vcs[v].demand == cap) freeze(v, cap);
      }
      continue;
    }

    // Copy: freeze() mutates unfrozen_on for the same link.
    const auto members = link_vcs[*tightest];
    for (auto v : members) {
      if (!frozen[v]) freeze(v, level);
    }
  }
  return rate;
}

double fairness_index(const std::vector<double>& actual, const std::vector<double>& optimal) {
  if (actual.size() != optimal.size() || actual.empty()) {
    throw std::invalid_argument("fairness_index: vectors must be non-empty and equally long");
  }
  double sum = 0.0;
  double sum_sq = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    if (optimal[i] == 0.0) throw DegenerateOptimal("optimal allocation has a zero entry");
    double x = actual[i] / optimal[i];
    sum += x;
    sum_sq += x * x;
  }
  if (sum_sq == 0.0) throw std::invalid_argument("fairness_index: all allocations are zero");
  return (sum * sum) / (static_cast<double>(actual.size()) * sum_sq);
}

double fairness_index(const AllocationVector& actual, const AllocationVector& optimal) {
  std::vector<double> a(actual.size());
  std::vector<double> o(optimal.size());
  std::transform(actual.begin(), actual.end(), a.begin(), to_double);
  std::transform(optimal.begin(), optimal.end(), o.begin(), to_double);
  return fairness_index(a, o);
}

MitResult mit_fair_share_detailed(const BigRational& link_bw, const std::vector<BigRational>& rates) {
  if (rates.empty()) throw std::invalid_argument("mit_fair_share: no VCs");
  if (link_bw <= 0) throw std::invalid_argument("mit_fair_share: bandwidth must be positive");

  const std::size_t n = rates.size();
  MitResult out;
  out.fair_share = link_bw / n;
  std::vector<bool> under(n, false);
  std::size_t count = 0;
  BigRational under_sum = 0;

  while (true) {
    std::size_t grown = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!under[i] && rates[i] < out.fair_share) {
        under[i] = true;
        under_sum += rates[i];
        ++grown;
      }
    }
    if (grown == 0) break;
    count += grown;
    if (count == n) break;
    out.fair_share = (link_bw - under_sum) / (n - count);
    ++out.recomputations;
  }
  out.underloading = count;
  return out;
}

BigRational mit_fair_share(const BigRational& link_bw, const std::vector<BigRational>& rates) {
  return mit_fair_share_detailed(link_bw, rates).fair_share;
}

double mit_fair_share(double link_bw, const std::vector<double>& rates) {
  std::vector<BigRational> exact;
  exact.reserve(rates.size());
  for (double r : rates) exact.emplace_back(r);
  return to_double(mit_fair_share(BigRational(link_bw), exact));
}

double beat_down_probability(double p, unsigned hops) {
  if (p < 0.0 || p > 1.0) throw std::invalid_argument("probability outside [0, 1]");
  return 1.0 - std::pow(1.0 - p, static_cast<double>(hops));
}

}  // namespace abrsim

#include "abrsim/errors.hpp"
#include "abrsim/fairness.hpp"
#include "abrsim/topology.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace abrsim;

namespace {

BigRational mbps(long long m) { return Rate::from_mbps(m).exact(); }

AllocationProblem single_link_problem(long long capacity, std::size_t n) {
  AllocationProblem p;
  p.links.push_back({"L", BigRational(capacity)});
  for (std::size_t i = 0; i < n; ++i) p.vcs.push_back({"v" + std::to_string(i), {"L"}, std::nullopt});
  return p;
}

}  // namespace

TEST_SUITE("fairness") {
  TEST_CASE("figure 3 allocation is (50, 50, 50, 100) Mbps") {
    const auto x = max_min(allocation_problem(build_figure3()));
    CHECK(x == AllocationVector{mbps(50), mbps(50), mbps(50), mbps(100)});
  }

  TEST_CASE("reduced problem after freezing vc 3 gives (50, 50, 100)") {
    // vc 3's 50 Mbps comes off L1 and L2; the others keep the same shares.
    auto p = allocation_problem(build_figure3());
    p.vcs.erase(p.vcs.begin() + 2);
    for (auto& l : p.links) {
      if (l.id != "L3") l.capacity -= mbps(50);
    }
    CHECK(max_min(p) == AllocationVector{mbps(50), mbps(50), mbps(100)});
  }

  TEST_CASE("demand caps below every link share bind") {
    ScenarioConfig cfg = build_figure3();
    for (auto& v : cfg.vcs) v.demand = Rate::from_mbps(10);
    const auto x = max_min(allocation_problem(cfg));
    CHECK(x == AllocationVector(4, mbps(10)));
  }

  TEST_CASE("single link splits evenly") {
    for (std::size_t n : {1u, 2u, 3u, 7u}) {
      const auto x = max_min(single_link_problem(100, n));
      CHECK(x == AllocationVector(n, BigRational(100) / static_cast<long long>(n)));
    }
  }

  TEST_CASE("parking lot oracle gives C/3 each") {
    const Rate c = Rate::from_mbps(150);
    const auto x = max_min(allocation_problem(build_parking_lot(3, c, 100)));
    CHECK(x == AllocationVector(3, c.exact() / 3));
  }

  TEST_CASE("max_min equals progressive filling on random problems") {
    std::mt19937_64 rng(11);
    for (int k = 0; k < 1000; ++k) {
      const auto p = test::random_problem(rng);
      const auto got = max_min(p);
      REQUIRE(got == test::progressive_filling(p));
      REQUIRE(test::is_max_min(p, got));
    }
  }

  TEST_CASE("invalid problems are rejected") {
    AllocationProblem p = single_link_problem(10, 1);
    p.vcs[0].links = {"nope"};
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p.vcs[0].links = {};
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p = single_link_problem(0, 1);
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  }

  TEST_CASE("fairness index examples") {
    CHECK(fairness_index(std::vector<double>{3, 4, 5}, std::vector<double>{3, 4, 5}) == doctest::Approx(1.0));
    CHECK(fairness_index(std::vector<double>{0.5, 1.0}, std::vector<double>{1, 1}) == doctest::Approx(0.9));
    for (std::size_t n : {2u, 5u, 10u}) {
      std::vector<double> a(n, 0.0), o(n, 1.0);
      a[0] = 1.0;
      CHECK(fairness_index(a, o) == doctest::Approx(1.0 / static_cast<double>(n)));
    }
    CHECK_THROWS_AS(fairness_index(std::vector<double>{1, 1}, std::vector<double>{1, 0}), DegenerateOptimal);
    CHECK_THROWS_AS(fairness_index(std::vector<double>{1}, std::vector<double>{1, 1}), std::invalid_argument);
  }

  TEST_CASE("fairness index lies in [1/n, 1] and is scale free") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 10.0);
    for (int k = 0; k < 2000; ++k) {
      const std::size_t n = 1 + rng() % 9;
      std::vector<double> a(n), o(n);
      for (std::size_t i = 0; i < n; ++i) a[i] = u(rng), o[i] = 0.1 + u(rng);
      a[0] += 0.01;
      const double f = fairness_index(a, o);
      REQUIRE(f <= 1.0 + 1e-12);
      REQUIRE(f >= 1.0 / static_cast<double>(n) - 1e-12);
      std::vector<double> scaled = a;
      for (auto& v : scaled) v *= 3.5;
      REQUIRE(fairness_index(scaled, o) == doctest::Approx(f));
    }
  }

  TEST_CASE("MIT fair share examples") {
    CHECK(mit_fair_share(30.0, {10, 10, 10}) == doctest::Approx(10.0));
    const auto r = mit_fair_share_detailed(BigRational(65), {BigRational(5), BigRational(100), BigRational(100)});
    CHECK(r.fair_share == BigRational(30));
    CHECK(r.recomputations == 1);
    CHECK(r.underloading == 1);
  }

  TEST_CASE("MIT fair share matches the reference iteration") {
    std::mt19937_64 rng(9);
    for (int k = 0; k < 10'000; ++k) {
      const std::size_t n = 1 + rng() % 10;
      std::vector<BigRational> rates;
      for (std::size_t i = 0; i < n; ++i) rates.emplace_back(static_cast<long long>(1 + rng() % 200));
      const BigRational bw(static_cast<long long>(1 + rng() % 1000));
      const auto got = mit_fair_share_detailed(bw, rates);
      const auto [share, recomputations] = test::mit_reference(bw, rates);
      REQUIRE(got.fair_share == share);
      REQUIRE(got.recomputations == recomputations);
      // A recomputation only ever raises the share.
      REQUIRE(got.fair_share >= bw / static_cast<long long>(n));
    }
  }

  TEST_CASE("beat-down probability") {
    for (unsigned h : {1u, 3u, 10u}) {
      CHECK(beat_down_probability(0.0, h) == 0.0);
      CHECK(beat_down_probability(1.0, h) == 1.0);
    }
    CHECK(beat_down_probability(0.1, 3) == doctest::Approx(0.271));
    for (unsigned h = 1; h < 10; ++h) CHECK(beat_down_probability(0.2, h + 1) > beat_down_probability(0.2, h));
  }
}

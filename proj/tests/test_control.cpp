#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "whft/control.hpp"
#include "whft/synth.hpp"

using namespace whft;
using namespace whft::control;

namespace {

LtiPlant scalar(double a, double b, double h, double d, double k = 0.0, double ku = 0.0) {
  LtiPlant p;
  p.id = "s";
  p.a = Matrix{{a}};
  p.b = Matrix{{b}};
  p.c_out = Matrix{{1}};
  p.sampling_period = h;
  p.let_deadline = d;
  p.gain = Matrix{{k, ku}};
  return p;
}

std::vector<double> augmented(const std::vector<double>& x, const std::vector<double>& u) {
  std::vector<double> v = x;
  v.insert(v.end(), u.begin(), u.end());
  return v;
}

}  // namespace

TEST_SUITE("control") {

TEST_CASE("discretization closed forms") {
  const auto integ = discretize(scalar(0, 1, 1, 1));
  CHECK(integ.ad(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(integ.bd0(0, 0)) < 1e-12);
  CHECK(integ.bd1(0, 0) == doctest::Approx(1.0).epsilon(1e-12));

  const auto decay = discretize(scalar(-1, 1, 1, 0));
  CHECK(std::abs(decay.ad(0, 0) - std::exp(-1.0)) < 1e-9);
  CHECK(std::abs(decay.bd0(0, 0) - (1.0 - std::exp(-1.0))) < 1e-9);
  CHECK(std::abs(decay.bd1(0, 0)) < 1e-9);

  std::mt19937_64 rng(12);
  for (int i = 0; i < 20; ++i) {
    const double a = -3.0 + 6.0 * (rng() % 1000) / 1000.0;
    const double h = 0.05 + (rng() % 100) / 100.0;
    const double d = h * (rng() % 100) / 100.0;
    const auto dp = discretize(scalar(a, 2.0, h, d));
    const double early = h - d;
    const auto integral = [&](double t) { return a == 0.0 ? 2.0 * t : 2.0 * (std::exp(a * t) - 1.0) / a; };
    CHECK(std::abs(dp.ad(0, 0) - std::exp(a * h)) < 1e-9 * std::max(1.0, std::exp(a * h)));
    CHECK(std::abs(dp.bd0(0, 0) - integral(early)) < 1e-9 * std::max(1.0, std::exp(a * h)));
    CHECK(std::abs(dp.bd1(0, 0) - (integral(h) - integral(early))) < 1e-9 * std::max(1.0, std::exp(a * h)));
  }

  auto tiny = oracle::random_plant(rng, 3, 1.0);
  tiny.sampling_period = 1e-9;
  tiny.let_deadline = 0.0;
  CHECK(max_abs_diff(discretize(tiny).ad, Matrix::identity(3)) < 1e-6);
}

TEST_CASE("semigroup property on stable 3x3 plants") {
  std::mt19937_64 rng(31);
  int checked = 0;
  while (checked < 20) {
    auto p = oracle::random_plant(rng, 3, 1.0);
    // shift the diagonal
    for (std::size_t i = 0; i < 3; ++i) p.a(i, i) -= 3.0;
    const double h1 = 0.1 + (rng() % 50) / 100.0, h2 = 0.1 + (rng() % 50) / 100.0;
    auto p1 = p, p2 = p, p12 = p;
    p1.sampling_period = p1.let_deadline = h1;
    p2.sampling_period = p2.let_deadline = h2;
    p12.sampling_period = p12.let_deadline = h1 + h2;
    const Matrix prod = discretize(p1).ad * discretize(p2).ad;
    CHECK(max_abs_diff(discretize(p12).ad, prod) < 1e-9);
    ++checked;
  }
}

TEST_CASE("validation names the field") {
  auto p = scalar(0, 1, 1, 2);
  CHECK_THROWS_WITH_AS(discretize(p), doctest::Contains("D must"), ControlError);
  p = scalar(0, 1, 1, 0);
  p.gain = Matrix{{1}};
  CHECK_THROWS_WITH_AS(discretize(p), doctest::Contains("K must"), ControlError);
  p = scalar(0, 1, 1, 0);
  p.cost_threshold = 0;
  CHECK_THROWS_AS(discretize(p), ControlError);
}

TEST_CASE("step matrices") {
  const auto dp = discretize(scalar(0, 1, 1, 0, 0.5));
  const Matrix hit = step_matrix(dp, true, 1);
  CHECK(hit(0, 0) == doctest::Approx(0.5));
  CHECK(hit(1, 0) == doctest::Approx(-0.5));
  const Matrix miss = step_matrix(dp, false, 1);
  CHECK(miss(0, 0) == doctest::Approx(1.0));
  CHECK(miss(1, 1) == doctest::Approx(1.0));
  CHECK_THROWS_AS(step_matrix(dp, true, 2), ControlError);

  const auto drift = discretize(scalar(0, 1, 1, 1));
  const Matrix phi = pattern_transition(drift, MissPattern::parse("M"), 0);
  CHECK(phi(0, 0) == doctest::Approx(1.0));

  const MissPattern hits = MissPattern::all_hit("h", 4);
  Matrix expect = Matrix::identity(2);
  for (int i = 0; i < 4; ++i) expect = hit * expect;
  CHECK(max_abs_diff(pattern_transition(dp, hits, 0), expect) < 1e-15);

  CHECK(staleness(MissPattern::parse("HMMH"), 4) == std::vector<std::uint32_t>{1, 1, 2, 3});
  CHECK(staleness(MissPattern::parse("HMMH"), 2) == std::vector<std::uint32_t>{1, 1, 2, 2});
  CHECK(staleness(MissPattern::parse("MM"), 3) == std::vector<std::uint32_t>{3, 3});
  CHECK(staleness_bound(12, 10) == 2);
  CHECK(staleness_bound(0, 10) == 1);
}

TEST_CASE("matrix products reproduce the explicit loop") {
  std::mt19937_64 rng(77);
  for (int pair = 0; pair < 50; ++pair) {
    const auto dp = discretize(oracle::random_plant(rng, 1 + rng() % 3, 1.0));
    const auto pat = oracle::random_pattern(rng, 12);
    std::normal_distribution<double> g;
    std::vector<double> x(dp.states()), u(dp.inputs());
    for (auto& v : x) v = g(rng);
    for (auto& v : u) v = g(rng);
    const auto tr = oracle::simulate_loop(dp, pat.misses, x, u, 100);
    const auto xi0 = augmented(x, u);
    for (std::size_t k : {1u, 7u, 33u, 100u}) {
      const auto got = oracle::matvec(transition(dp, pat, 0, k), xi0);
      const auto want = augmented(tr.x[k - 1], tr.u[k - 1]);
      double scale = 1.0;
      for (double v : want) scale = std::max(scale, std::abs(v));
      for (std::size_t i = 0; i < want.size(); ++i) CHECK(std::abs(got[i] - want[i]) <= 1e-9 * scale);
    }
  }
}

TEST_CASE("stability verdicts agree with long-run decay") {
  CHECK(is_stable(discretize(scalar(0, 1, 1, 0, 0.5)), MissPattern::all_hit("a", 1)));
  CHECK_FALSE(is_stable(discretize(scalar(0, 1, 1, 1)), MissPattern::parse("M")));

  std::mt19937_64 rng(123);
  int stable = 0, unstable = 0, pairs = 0;
  while (pairs < 100) {
    const auto dp = discretize(oracle::random_plant(rng, 1 + rng() % 3, 1.0));
    const auto pat = oracle::random_pattern(rng, 8);
    const double rho = oracle::gelfand_radius(pattern_transition(dp, pat, 0));
    if (std::abs(rho - 1.0) < 0.02) continue;
    ++pairs;
    const bool decays = oracle::log_growth(dp, pat, rng, 10000) < 0.0;
    CHECK(is_stable(dp, pat) == decays);
    (decays ? stable : unstable)++;
  }
  CHECK(stable > 5);
  CHECK(unstable > 5);
}

TEST_CASE("control cost examples") {
  auto loop = scalar(0, 1, 1, 0, 0.5);
  loop.cost_threshold = 0.01;
  CHECK(all_hit_cost(discretize(loop)) == ControlCost{7});
  loop.cost_threshold = 1.0;
  CHECK(all_hit_cost(discretize(loop)) == ControlCost{0});
  CHECK_FALSE(control_cost(discretize(scalar(0, 1, 1, 1)), MissPattern::parse("M")).has_value());
  CHECK(to_string(ControlCost{}) == "unstable");
  CHECK(cost_less(ControlCost{3}, ControlCost{}));
  CHECK_FALSE(cost_less(ControlCost{}, ControlCost{3}));
}

TEST_CASE("cost follows the geometric decay on scalar loops") {
  for (double f : {0.1, 0.3, 0.5, 0.8, 0.95}) {
    auto loop = scalar(0, 1, 1, 0, 1.0 - f);
    loop.cost_threshold = 0.05;
    // smallest r with f^r <= J_th
    std::uint32_t r = 0;
    double v = 1.0;
    while (v > 0.05) {
      v *= f;
      ++r;
    }
    CHECK(all_hit_cost(discretize(loop)) == ControlCost{r});
  }
}

TEST_CASE("cost is invariant under rotation and history depth") {
  std::mt19937_64 rng(5);
  int compared = 0;
  for (int i = 0; i < 200 && compared < 30; ++i) {
    const auto plant = oracle::random_plant(rng, 1 + rng() % 2, 1.0);
    const auto dp1 = discretize(plant, 1);
    const auto pat = oracle::random_pattern(rng, 10);
    const auto c1 = control_cost(dp1, pat);
    if (!c1) continue;
    ++compared;
    MissPattern rot = pat;
    std::rotate(rot.misses.begin(), rot.misses.begin() + static_cast<long>(rng() % rot.size()),
                rot.misses.end());
    CHECK(control_cost(dp1, rot) == c1);
    CHECK(spectral_radius(pattern_transition(dp1, pat, 0)) ==
          doctest::Approx(spectral_radius(pattern_transition(dp1, pat, pat.size() / 2))).epsilon(1e-8));
    for (std::uint32_t psi : {2u, 4u}) {
      const auto dpk = discretize(plant, psi);
      CHECK(control_cost(dpk, pat) == c1);
      CHECK(is_stable(dpk, pat));
    }
  }
  CHECK(compared >= 10);
}

TEST_CASE("pattern enumeration") {
  std::size_t count = 0;
  CHECK(for_each_pattern(10, 2, [&](const MissPattern& p) {
    CHECK(p.miss_count() <= 2);
    ++count;
    return true;
  }) == 56);
  CHECK(count == 56);
  CHECK(for_each_pattern(4, 4, [](const MissPattern&) { return true; }) == 16);
  CHECK(for_each_pattern(5, 3, [](const MissPattern&) { return false; }) == 1);
  CHECK_THROWS_AS(for_each_pattern(25, 1, [](const MissPattern&) { return true; }), ControlError);
}

TEST_CASE("approximate worst cost") {
  for (const auto& plant : synth::demo_plants()) {
    const auto dp = discretize(plant);
    CHECK(approx_worst_cost(dp, {0, 10}) == all_hit_cost(dp));
    ControlCost prev = approx_worst_cost(dp, {0, 10});
    for (std::uint32_t k = 1; k <= 4; ++k) {
      const ControlCost c = approx_worst_cost(dp, {k, 10});
      CHECK_FALSE(cost_less(c, prev));
      prev = c;
    }
  }
}

TEST_CASE("synthesized constraints match exhaustive enumeration") {
  const auto drift = discretize(scalar(0.5, 1, 1, 0, 0.0));
  CHECK_FALSE(synthesize_wh(drift, 6).has_value());
  const auto calm = discretize(scalar(-1, 1, 1, 0, 0.1));
  CHECK(synthesize_wh(calm, 6) == std::optional<std::uint32_t>{5});

  auto check = [](const DiscretePlant& dp) {
    const std::size_t n = 10;
    std::optional<std::uint32_t> expect;
    for (std::uint32_t k = 0; k <= n; ++k) {
      bool ok = true;
      for (std::uint32_t bits = 0; bits < (1u << n) && ok; ++bits) {
        if (static_cast<std::uint32_t>(__builtin_popcount(bits)) > k) continue;
        MissPattern p = MissPattern::all_hit("p", n);
        for (std::size_t i = 0; i < n; ++i) p.misses[i] = (bits >> i) & 1u;
        ok = is_stable(dp, p);
      }
      if (!ok) break;
      expect = k;
    }
    CHECK(synthesize_wh(dp, n) == expect);
  };
  for (const auto& plant : synth::demo_plants()) {
    if (plant.id == "cruise") check(discretize(plant));
  }
  std::mt19937_64 rng(8);
  for (int i = 0; i < 3; ++i) check(discretize(oracle::random_plant(rng, 1, 1.5)));
}

}

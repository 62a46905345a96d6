#include <doctest.h>

#include "fixtures.hpp"
#include "oracles.hpp"

using namespace flowctl;

namespace {

MetricReport grid_report(const std::function<double(const std::string&, std::uint64_t, const std::string&)>& f) {
  MetricReport r;
  for (const std::string& scene : {"a", "b"})
    for (std::uint64_t seed : {0, 1, 2})
      for (const std::string& metric : {"m1", "m2"}) r.add(scene, seed, metric, f(scene, seed, metric));
  return r;
}

}  // namespace

TEST_CASE("composite score") {
  auto base = grid_report([](const std::string& s, std::uint64_t seed, const std::string& m) {
    return 1.0 + 0.1 * seed + (s == "a" ? 0.2 : 0.5) + (m == "m1" ? 0.0 : 1.0);
  });

  SUBCASE("base against itself is exactly zero") {
    CHECK(composite_score(base, base).score == 0.0);
    CHECK(composite_score(base, base).skipped == 0);
  }
  SUBCASE("doubling every metric scores one") {
    auto doubled = grid_report([&](const std::string& s, std::uint64_t seed, const std::string& m) {
      return 2.0 * (1.0 + 0.1 * seed + (s == "a" ? 0.2 : 0.5) + (m == "m1" ? 0.0 : 1.0));
    });
    CHECK(composite_score(doubled, base).score == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("symmetric +-10% cancels") {
    auto mixed = grid_report([&](const std::string& s, std::uint64_t seed, const std::string& m) {
      const double b = 1.0 + 0.1 * seed + (s == "a" ? 0.2 : 0.5) + (m == "m1" ? 0.0 : 1.0);
      return m == "m1" ? 1.1 * b : 0.9 * b;
    });
    CHECK(composite_score(mixed, base).score == doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("near-zero base values are skipped and counted") {
    MetricReport zbase = base;
    MetricReport zcur = base;
    zbase.add("c", 9, "m1", 0.0);
    zcur.add("c", 9, "m1", 4.0);
    const auto res = composite_score(zcur, zbase);
    CHECK(res.skipped == 1);
    CHECK(res.score == doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("key mismatches are rejected") {
    MetricReport missing;
    for (const auto& [k, v] : base.values())
      if (!(k.scene == "b" && k.seed == 2 && k.metric == "m2")) missing.add(k.scene, k.seed, k.metric, v);
    CHECK_THROWS_AS(composite_score(missing, base), KeyMismatch);
    MetricReport renamed = missing;
    renamed.add("b", 2, "m3", 1.0);
    CHECK_THROWS_AS(composite_score(renamed, base), KeyMismatch);
  }
  SUBCASE("duplicate records are rejected") {
    MetricReport r;
    r.add("a", 0, "m", 1.0);
    CHECK_THROWS_AS(r.add("a", 0, "m", 2.0), KeyMismatch);
  }
  SUBCASE("all-zero base raises division error") {
    MetricReport zb, zc;
    zb.add("a", 0, "m", 0.0);
    zc.add("a", 0, "m", 1.0);
    CHECK_THROWS_AS(composite_score(zc, zb), DivisionByZero);
  }
}

TEST_CASE("elo ratings") {
  EloTable table;
  table.register_candidate("base");
  table.register_candidate("focus");
  table.register_candidate("cosine");

  SUBCASE("worked update from equal ratings") {
    table.update("base", "focus", MatchOutcome::AWins);
    CHECK(table.rating("base") == doctest::Approx(1516.0).epsilon(1e-12));
    CHECK(table.rating("focus") == doctest::Approx(1484.0).epsilon(1e-12));
  }
  SUBCASE("draw between equals changes nothing") {
    table.update("base", "focus", MatchOutcome::Draw);
    CHECK(table.rating("base") == 1500.0);
    CHECK(table.rating("focus") == 1500.0);
  }
  SUBCASE("expected score at a 400-point gap is 10/11") {
    CHECK(EloTable::expected_score(1900.0, 1500.0) == doctest::Approx(10.0 / 11.0).epsilon(1e-12));
    CHECK(EloTable::expected_score(1500.0, 1900.0) + EloTable::expected_score(1900.0, 1500.0) ==
          doctest::Approx(1.0).epsilon(1e-15));
  }
  SUBCASE("rating sum is conserved over random match logs") {
    double total0 = 0.0;
    for (const auto& [k, v] : table.ratings()) total0 += v;
    const std::vector<std::string> names{"base", "focus", "cosine"};
    for (int i = 0; i < 1000; ++i) {
      const std::size_t ai = static_cast<std::size_t>(uniform01(5, 3 * static_cast<std::uint64_t>(i)) * 3);
      const std::size_t bi =
          (ai + 1 + static_cast<std::size_t>(uniform01(5, 3 * static_cast<std::uint64_t>(i) + 1) * 2)) % 3;
      const auto a = names[ai];
      const auto b = names[bi];
      const double u = uniform01(5, 3 * static_cast<std::uint64_t>(i) + 2);
      table.update(a, b, u < 0.4 ? MatchOutcome::AWins : u < 0.8 ? MatchOutcome::BWins : MatchOutcome::Draw);
      double total = 0.0;
      for (const auto& [k, v] : table.ratings()) total += v;
      CHECK(std::abs(total - total0) <= 1e-9);
    }
  }
  SUBCASE("anti-symmetry of the update") {
    EloTable t1, t2;
    for (auto* t : {&t1, &t2}) {
      t->register_candidate("p");
      t->register_candidate("q");
    }
    t1.update("p", "q", MatchOutcome::AWins);
    t2.update("q", "p", MatchOutcome::BWins);
    CHECK(t1.rating("p") == doctest::Approx(t2.rating("p")).epsilon(1e-15));
    CHECK(t1.rating("q") == doctest::Approx(t2.rating("q")).epsilon(1e-15));
  }
  SUBCASE("win rate with half-credit draws") {
    table.update("base", "focus", MatchOutcome::AWins);
    table.update("base", "focus", MatchOutcome::AWins);
    table.update("focus", "base", MatchOutcome::AWins);
    table.update("base", "cosine", MatchOutcome::AWins);
    CHECK(win_rate(table, "base") == doctest::Approx(0.75).epsilon(1e-15));
    EloTable draws;
    draws.register_candidate("x");
    draws.register_candidate("y");
    draws.update("x", "y", MatchOutcome::Draw);
    draws.update("x", "y", MatchOutcome::Draw);
    CHECK(win_rate(draws, "x") == doctest::Approx(0.5).epsilon(1e-15));
    CHECK_THROWS_AS(win_rate(table, "unknown"), UnknownCandidate);
    EloTable empty;
    empty.register_candidate("z");
    CHECK_THROWS_AS(win_rate(empty, "z"), NoMatches);
    CHECK_THROWS_AS(empty.update("z", "w", MatchOutcome::Draw), UnknownCandidate);
  }
}

TEST_CASE("cost integral") {
  SamplerConfig cfg;
  cfg.steps = 16;
  struct ZeroField {
    int state_dim() const { return 2; }
    Vec eval(const Vec& x, double) const { return Vec(x.size(), 0.0); }
  };
  auto traj = sample_ode(ZeroField{}, cfg, {1.0, 1.0});

  SUBCASE("zero cost and zero control integrate to zero") {
    auto zero = RunningCost::zero();
    CHECK(cost_integral(traj, zero) == 0.0);
    std::vector<Vec> controls(static_cast<std::size_t>(cfg.steps), Vec{0.0, 0.0});
    CHECK(cost_integral(traj, zero, &controls) == 0.0);
  }
  SUBCASE("constant cost gives the grid span") {
    RunningCost one{[](const Vec&, double) { return 1.0; },
                    [](const Vec& x, double) { return Vec(x.size(), 0.0); }};
    CHECK(cost_integral(traj, one) == doctest::Approx(1.0 - cfg.t_start).epsilon(1e-12));
  }
  SUBCASE("control energy term") {
    auto zero = RunningCost::zero();
    std::vector<Vec> controls(static_cast<std::size_t>(cfg.steps), Vec{2.0, 0.0});
    // 1/2 ||u||^2 = 2 over the whole span
    CHECK(cost_integral(traj, zero, &controls) == doctest::Approx(2.0 * (1.0 - cfg.t_start)).epsilon(1e-12));
    controls.pop_back();
    CHECK_THROWS_AS(cost_integral(traj, zero, &controls), GridMismatch);
  }
  SUBCASE("left-riemann refinement converges at first order") {
    RunningCost smooth{[](const Vec& x, double t) { return std::sin(3.0 * t) + x[0]; },
                       [](const Vec& x, double) { return Vec(x.size(), 0.0); }};
    SamplerConfig coarse = cfg, fine = cfg, finest = cfg;
    coarse.steps = 32;
    fine.steps = 64;
    finest.steps = 320;
    const double ref = cost_integral(sample_ode(ZeroField{}, finest, {1.0, 1.0}), smooth);
    const double c = cost_integral(sample_ode(ZeroField{}, coarse, {1.0, 1.0}), smooth);
    const double f = cost_integral(sample_ode(ZeroField{}, fine, {1.0, 1.0}), smooth);
    CHECK(std::abs(c - ref) / std::abs(ref) <= 0.02);
    // halving the step roughly halves the error
    CHECK(std::abs(f - ref) <= 0.65 * std::abs(c - ref));
  }
}

TEST_CASE("energy distance") {
  SUBCASE("identical populations give exactly zero") {
    std::vector<Vec> a;
    for (int i = 0; i < 100; ++i) a.push_back(normal_vec(3, 2 * static_cast<std::uint64_t>(i), 2));
    CHECK(energy_distance(a, a) == 0.0);
  }
  SUBCASE("matched gaussians stay below the null threshold") {
    std::vector<Vec> a, b;
    for (int i = 0; i < 4096; ++i) {
      a.push_back(normal_vec(10, 2 * static_cast<std::uint64_t>(i), 2));
      b.push_back(normal_vec(11, 2 * static_cast<std::uint64_t>(i), 2));
    }
    const double null = energy_distance(a, b);
    CHECK(null < 0.05);
    std::vector<Vec> shifted;
    for (const auto& x : b) shifted.push_back(add(x, Vec{3.0, 0.0}));
    CHECK(energy_distance(a, shifted) > 10.0 * std::max(null, 1e-4));
  }
  SUBCASE("dimension checks") {
    CHECK_THROWS_AS(energy_distance({}, {{1.0}}), DimensionMismatch);
    CHECK_THROWS_AS(energy_distance({{1.0}}, {{1.0, 2.0}}), DimensionMismatch);
  }
}

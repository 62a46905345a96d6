#include <doctest.h>

#include "flowctl/schedule.hpp"
#include "oracles.hpp"

using namespace flowctl;

namespace {
const double kSqrt2 = 1.4142135623730951;
const double kSqrt8 = 2.8284271247461903;
}  // namespace

TEST_CASE("rectified flow boundary conditions and monotonicity") {
  auto rf = InterpolantSchedule::rectified_flow();
  CHECK(std::abs(rf.alpha(0.0)) <= 1e-9);
  CHECK(std::abs(rf.beta(0.0) - 1.0) <= 1e-9);
  CHECK(std::abs(rf.alpha(1.0) - 1.0) <= 1e-9);
  CHECK(std::abs(rf.beta(1.0)) <= 1e-9);
  double prev_a = -1.0, prev_b = 2.0;
  for (int i = 0; i <= 120; ++i) {
    const double t = i / 120.0;
    CHECK(rf.alpha(t) > prev_a);
    CHECK(rf.beta(t) < prev_b);
    prev_a = rf.alpha(t);
    prev_b = rf.beta(t);
  }
}

TEST_CASE("schedule derivatives match central differences") {
  const double h = 1e-5;
  auto check_sched = [&](const InterpolantSchedule& s, const std::vector<double>& ts) {
    for (double t : ts) {
      const double fa = (s.alpha(t + h) - s.alpha(t - h)) / (2 * h);
      const double fb = (s.beta(t + h) - s.beta(t - h)) / (2 * h);
      CHECK(std::abs(s.alpha_dot(t) - fa) <= 1e-4);
      CHECK(std::abs(s.beta_dot(t) - fb) <= 1e-4);
    }
  };
  std::vector<double> grid;
  for (int i = 1; i <= 99; ++i) grid.push_back(i / 100.0);
  check_sched(InterpolantSchedule::rectified_flow(), grid);

  // vp-induced derivatives are piecewise in the table cells, so probe cell
  // midpoints away from the knots
  const int K = 1000;
  auto vp = vp_to_fm_schedule(VpRateTable::linear(K, 1e-4, 2e-2));
  std::vector<double> mid;
  for (int k = 10; k < K - 10; k += 13) mid.push_back(1.0 - (k + 0.5) / K);
  check_sched(vp, mid);
}

TEST_CASE("sigma_mem closed-form values for rectified flow") {
  auto rf = InterpolantSchedule::rectified_flow();
  CHECK(sigma_mem(rf, 0.5) == doctest::Approx(kSqrt2).epsilon(1e-12));
  CHECK(sigma_mem(rf, 0.2) == doctest::Approx(kSqrt8).epsilon(1e-12));
  CHECK(sigma_mem(rf, 1.0) == 0.0);
  CHECK_THROWS_AS(sigma_mem(rf, 0.0), DomainError);
  CHECK_THROWS_AS(sigma_mem(rf, -0.1), DomainError);
}

TEST_CASE("vp rate table invariants") {
  auto table = VpRateTable::linear(1000, 1e-4, 2e-2);
  double prod = 1.0;
  double prev = 2.0;
  for (int k = 0; k <= table.steps(); ++k) {
    if (k > 0) prod *= 1.0 - table.beta_steps()[static_cast<std::size_t>(k - 1)];
    const double abar = table.alpha_bar_at(k);
    CHECK(std::abs(abar - prod) <= 1e-12 * std::max(1.0, std::abs(prod)));
    CHECK(abar < prev);
    prev = abar;
    // continuous curve passes through the grid values
    CHECK(table.alpha_bar(static_cast<double>(k) / table.steps()) ==
          doctest::Approx(abar).epsilon(1e-12));
  }
  CHECK_THROWS_AS(VpRateTable::linear(1, 1e-4, 2e-2), ScheduleError);
  CHECK_THROWS_AS(VpRateTable({0.5, 1.5}), ScheduleError);
}

TEST_CASE("vp to fm schedule boundaries and monotonicity") {
  auto vp = vp_to_fm_schedule(VpRateTable::linear(1000, 1e-4, 2e-2));
  CHECK(vp.alpha(1.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(vp.beta(1.0) == 0.0);
  CHECK(vp.beta(0.0) >= 0.999);
  double prev = -1.0;
  for (int i = 0; i <= 100; ++i) {
    const double a = vp.alpha(i / 100.0);
    CHECK(a > prev);
    prev = a;
  }
  // memoryless coefficient stays finite and nonnegative over the working range
  for (int i = 1; i <= 99; ++i) {
    const double s = sigma_mem(vp, i / 100.0);
    CHECK(std::isfinite(s));
    CHECK(s >= 0.0);
  }
}

TEST_CASE("score/velocity coefficients") {
  auto rf = InterpolantSchedule::rectified_flow();
  auto [kappa, eta] = score_velocity_coeffs(rf, 0.5);
  CHECK(kappa == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(eta == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(score_velocity_coeffs(rf, 0.999).eta < 2e-3);  // eta -> 0 as t -> 1

  // sigma_mem(t)^2 = 2 eta on a 1e-3-spaced grid, for both schedule kinds
  auto vp = vp_to_fm_schedule(VpRateTable::linear(400, 1e-4, 2e-2));
  for (const auto& sched : {rf, vp}) {
    for (int i = 1; i < 1000; ++i) {
      const double t = i * 1e-3;
      const double s2 = sigma_mem(sched, t) * sigma_mem(sched, t);
      const double e2 = 2.0 * score_velocity_coeffs(sched, t).eta;
      CHECK(std::abs(s2 - e2) <= 1e-9 * std::max(1.0, std::abs(e2)));
    }
  }
}

TEST_CASE("memoryless diffusion schedule matches sigma_mem") {
  auto rf = InterpolantSchedule::rectified_flow();
  auto diff = DiffusionSchedule::memoryless(rf);
  for (int i = 1; i < 100; ++i) {
    const double t = i / 100.0;
    CHECK(diff.sigma(t) == doctest::Approx(sigma_mem(rf, t)).epsilon(1e-9));
    CHECK(diff.sigma(t) >= 0.0);
  }
  CHECK(DiffusionSchedule::zero().sigma(0.5) == 0.0);
}

TEST_CASE("drift from velocity") {
  auto rf = InterpolantSchedule::rectified_flow();
  const Vec v{1.0, 0.0};
  const Vec x{2.0, 2.0};

  SUBCASE("zero diffusion recovers the ODE") {
    auto b = drift_from_velocity(rf, DiffusionSchedule::zero(), v, x, 0.37);
    CHECK(b == v);
  }
  SUBCASE("memoryless simplification 2v - (alpha_dot/alpha) x") {
    auto b = drift_from_velocity(rf, DiffusionSchedule::memoryless(rf), v, x, 0.5);
    CHECK(b[0] == doctest::Approx(-2.0).epsilon(1e-12));
    CHECK(b[1] == doctest::Approx(-4.0).epsilon(1e-12));
  }
  SUBCASE("correction vanishes when v is the scaling field") {
    const double t = 0.3;
    const Vec vs = scaled(x, rf.kappa(t));
    auto b = drift_from_velocity(rf, DiffusionSchedule::memoryless(rf), vs, x, t);
    for (std::size_t i = 0; i < b.size(); ++i) CHECK(b[i] == doctest::Approx(vs[i]).epsilon(1e-12));
  }
  SUBCASE("custom table reproduces the memoryless drift when sigma matches") {
    std::vector<std::pair<double, double>> knots;
    for (int i = 1; i <= 99; ++i) knots.emplace_back(i / 100.0, sigma_mem(rf, i / 100.0));
    auto diff = DiffusionSchedule::custom(knots);
    const double t = 0.5;  // knot, so the interpolated sigma is exact
    auto b = drift_from_velocity(rf, diff, v, x, t);
    CHECK(b[0] == doctest::Approx(-2.0).epsilon(1e-9));
    CHECK(b[1] == doctest::Approx(-4.0).epsilon(1e-9));
  }
}

TEST_CASE("velocity from epsilon") {
  auto vp = vp_to_fm_schedule(VpRateTable::linear(1000, 1e-4, 2e-2));

  SUBCASE("zero noise prediction gives the pure scaling field") {
    const Vec x{0.7, -1.1};
    const double t = 0.4;
    auto v = velocity_from_epsilon(vp, Vec{0.0, 0.0}, x, t);
    const double k = score_velocity_coeffs(vp, t).kappa;
    CHECK(v[0] == doctest::Approx(k * x[0]).epsilon(1e-12));
    CHECK(v[1] == doctest::Approx(k * x[1]).epsilon(1e-12));
  }
  SUBCASE("linearity in eps") {
    const Vec x{0.3, 0.9};
    const Vec e{0.5, -0.25};
    const double t = 0.6;
    auto v1 = velocity_from_epsilon(vp, e, x, t);
    auto v2 = velocity_from_epsilon(vp, scaled(e, 2.0), x, t);
    const auto [k, eta] = score_velocity_coeffs(vp, t);
    const double c = eta / vp.beta(t);
    for (std::size_t i = 0; i < x.size(); ++i)
      CHECK(v2[i] - v1[i] == doctest::Approx(-c * e[i]).epsilon(1e-10));
  }
  SUBCASE("exact Gaussian epsilon reproduces the analytic path velocity") {
    const auto& table = *vp.vp_table();
    for (double s : {0.0, 0.7}) {
      oracles::GaussianPathVelocity ref{vp, Vec{1.0, -0.5}, s};
      const std::uint64_t key = 123;
      for (int probe = 0; probe < 100; ++probe) {
        const double t = 0.02 + 0.96 * uniform01(key, 1000 + probe);
        Vec x = normal_vec(key, 10 * probe, 2);
        Vec eps = oracles::exact_epsilon(table, ref.mu, s, x, 1.0 - t);
        Vec got = velocity_from_epsilon(vp, eps, x, t);
        Vec want = ref.eval(x, t);
        for (std::size_t i = 0; i < x.size(); ++i)
          CHECK(std::abs(got[i] - want[i]) <= 1e-6 * std::max(1.0, std::abs(want[i])));
      }
    }
  }
  SUBCASE("rejected at t=1") {
    CHECK_THROWS_AS(velocity_from_epsilon(vp, Vec{0.0}, Vec{0.0}, 1.0), DomainError);
  }
}

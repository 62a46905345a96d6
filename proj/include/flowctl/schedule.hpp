#pragma once

#include <algorithm>
#include <memory>
#include <optional>
#include <utility>

#include "flowctl/common.hpp"

namespace flowctl {

// ---------------------------------------------------------------------------
// VP rate table: discrete K-step noising chain lifted to continuous time.
// alpha_bar(tau) is log-linear between grid points, so it passes through the
// discrete cumulative products exactly and keeps the exp(-integral) form with
// a piecewise-constant effective rate.
// ---------------------------------------------------------------------------

class VpRateTable {
 public:
  explicit VpRateTable(std::vector<double> beta_steps) : beta_(std::move(beta_steps)) {
    const int k = static_cast<int>(beta_.size());
    if (k < 2) throw ScheduleError("vp table needs at least 2 steps, got " + std::to_string(k));
    log_abar_.resize(beta_.size() + 1);
    log_abar_[0] = 0.0;
    for (std::size_t i = 0; i < beta_.size(); ++i) {
      if (!(beta_[i] > 0.0 && beta_[i] < 1.0))
        throw ScheduleError("vp rate beta[" + std::to_string(i) + "] outside (0,1)");
      log_abar_[i + 1] = log_abar_[i] + std::log1p(-beta_[i]);
    }
  }

  static VpRateTable linear(int steps, double beta_min, double beta_max) {
    if (steps < 2) throw ScheduleError("vp table needs at least 2 steps");
    std::vector<double> b(static_cast<std::size_t>(steps));
    for (int k = 0; k < steps; ++k)
      b[static_cast<std::size_t>(k)] =
          beta_min + (beta_max - beta_min) * (steps == 1 ? 0.0 : double(k) / double(steps - 1));
    return VpRateTable(std::move(b));
  }

  int steps() const { return static_cast<int>(beta_.size()); }
  const std::vector<double>& beta_steps() const { return beta_; }

  /// Discrete cumulative product, k in [0, K].
  double alpha_bar_at(int k) const { return std::exp(log_abar_.at(static_cast<std::size_t>(k))); }

  /// Continuous marginal coefficient, tau in [0,1].
  double alpha_bar(double tau) const {
    if (tau <= 0.0) return 1.0;
    if (tau >= 1.0) return std::exp(log_abar_.back());
    const double pos = tau * steps();
    const int k = std::min(static_cast<int>(pos), steps() - 1);
    const double frac = pos - k;
    const double lg = log_abar_[static_cast<std::size_t>(k)] +
                      frac * std::log1p(-beta_[static_cast<std::size_t>(k)]);
    return std::exp(lg);
  }

  /// Effective piecewise-constant rate: alpha_bar(tau) = exp(-int_0^tau rate).
  double rate(double tau) const {
    const int k = std::clamp(static_cast<int>(tau * steps()), 0, steps() - 1);
    return -std::log1p(-beta_[static_cast<std::size_t>(k)]) * steps();
  }

 private:
  std::vector<double> beta_;
  std::vector<double> log_abar_;  // partial sums of log(1-beta), K+1 entries
};

// ---------------------------------------------------------------------------
// Interpolant scheduler (alpha_t, beta_t) with derivatives. Immutable after
// construction; copies are cheap (the VP table is shared).
// ---------------------------------------------------------------------------

enum class InterpolantKind { RectifiedFlow, VpInduced };

class InterpolantSchedule {
 public:
  static InterpolantSchedule rectified_flow() { return InterpolantSchedule(InterpolantKind::RectifiedFlow, nullptr); }

  static InterpolantSchedule vp_induced(VpRateTable table) {
    return InterpolantSchedule(InterpolantKind::VpInduced,
                               std::make_shared<const VpRateTable>(std::move(table)));
  }

  InterpolantKind kind() const { return kind_; }
  const VpRateTable* vp_table() const { return table_.get(); }

  double alpha(double t) const {
    return kind_ == InterpolantKind::RectifiedFlow ? t : std::sqrt(table_->alpha_bar(1.0 - t));
  }

  double beta(double t) const {
    if (kind_ == InterpolantKind::RectifiedFlow) return 1.0 - t;
    return std::sqrt(std::max(0.0, 1.0 - table_->alpha_bar(1.0 - t)));
  }

  double alpha_dot(double t) const {
    if (kind_ == InterpolantKind::RectifiedFlow) return 1.0;
    // d/dt sqrt(abar(1-t)) = (rate(1-t)/2) * alpha(t)
    return 0.5 * table_->rate(1.0 - t) * alpha(t);
  }

  double beta_dot(double t) const {
    if (kind_ == InterpolantKind::RectifiedFlow) return -1.0;
    const double b = beta(t);
    const double abar = table_->alpha_bar(1.0 - t);
    if (b == 0.0) throw DomainError("beta_dot singular at t=1 for vp-induced schedule");
    return -0.5 * table_->rate(1.0 - t) * abar / b;
  }

  /// log-derivative of alpha, computed without the 0/0 at small alpha.
  double kappa(double t) const {
    if (kind_ == InterpolantKind::RectifiedFlow) {
      if (t <= 0.0) throw DomainError("kappa undefined at t<=0");
      return 1.0 / t;
    }
    return 0.5 * table_->rate(1.0 - t);
  }

 private:
  InterpolantSchedule(InterpolantKind k, std::shared_ptr<const VpRateTable> t)
      : kind_(k), table_(std::move(t)) {}

  InterpolantKind kind_;
  std::shared_ptr<const VpRateTable> table_;
};

/// Time change of Appendix-style VP chains into a flow-matching scheduler.
/// Rejects tables whose induced alpha misses the t=1 boundary.
inline InterpolantSchedule vp_to_fm_schedule(VpRateTable table) {
  auto sched = InterpolantSchedule::vp_induced(std::move(table));
  const double a1 = sched.alpha(1.0);
  if (std::abs(a1 - 1.0) > 1e-6)
    throw ScheduleError("vp-induced schedule has alpha(1)=" + std::to_string(a1));
  return sched;
}

// ---------------------------------------------------------------------------
// Diffusion coefficient sigma(t).
// ---------------------------------------------------------------------------

/// Memoryless coefficient sqrt(2 beta_t (alpha_dot/alpha * beta_t - beta_dot)).
/// Returns 0 at t=1 when beta(1)=0 (the radicand degenerates there).
inline double sigma_mem(const InterpolantSchedule& sched, double t) {
  if (t <= 0.0 || t > 1.0) throw DomainError("sigma_mem needs t in (0,1], got " + std::to_string(t));
  if (t == 1.0 && sched.beta(1.0) == 0.0) return 0.0;
  const double a = sched.alpha(t);
  if (!(a > 0.0)) throw DomainError("sigma_mem needs alpha(t) > 0");
  const double b = sched.beta(t);
  const double rad = 2.0 * b * (sched.kappa(t) * b - sched.beta_dot(t));
  if (rad < 0.0) throw DomainError("sigma_mem radicand negative: invalid scheduler");
  return std::sqrt(rad);
}

enum class DiffusionKind { Zero, Memoryless, Custom };

class DiffusionSchedule {
 public:
  static DiffusionSchedule zero() { return DiffusionSchedule(DiffusionKind::Zero, {}, {}); }

  static DiffusionSchedule memoryless(InterpolantSchedule sched) {
    return DiffusionSchedule(DiffusionKind::Memoryless, std::move(sched), {});
  }

  /// Piecewise-linear table on (time, value) pairs with increasing times.
  static DiffusionSchedule custom(std::vector<std::pair<double, double>> table) {
    if (table.size() < 2) throw ScheduleError("custom diffusion table needs >= 2 knots");
    for (std::size_t i = 0; i < table.size(); ++i) {
      if (table[i].second < 0.0) throw ScheduleError("diffusion values must be >= 0");
      if (i > 0 && table[i].first <= table[i - 1].first)
        throw ScheduleError("diffusion knots must be strictly increasing in t");
    }
    return DiffusionSchedule(DiffusionKind::Custom, {}, std::move(table));
  }

  DiffusionKind kind() const { return kind_; }

  double sigma(double t) const {
    switch (kind_) {
      case DiffusionKind::Zero:
        return 0.0;
      case DiffusionKind::Memoryless:
        return sigma_mem(*interp_, t);
      case DiffusionKind::Custom: {
        if (t <= table_.front().first) return table_.front().second;
        if (t >= table_.back().first) return table_.back().second;
        std::size_t i = 1;
        while (table_[i].first < t) ++i;
        const auto& [t0, v0] = table_[i - 1];
        const auto& [t1, v1] = table_[i];
        return v0 + (v1 - v0) * (t - t0) / (t1 - t0);
      }
    }
    return 0.0;
  }

 private:
  DiffusionSchedule(DiffusionKind k, std::optional<InterpolantSchedule> s,
                    std::vector<std::pair<double, double>> t)
      : kind_(k), interp_(std::move(s)), table_(std::move(t)) {}

  DiffusionKind kind_;
  std::optional<InterpolantSchedule> interp_;
  std::vector<std::pair<double, double>> table_;
};

// ---------------------------------------------------------------------------
// Score/velocity correspondence.
// ---------------------------------------------------------------------------

struct ScoreVelocityCoeffs {
  double kappa;  // alpha_dot / alpha
  double eta;    // beta (kappa beta - beta_dot)
};

inline ScoreVelocityCoeffs score_velocity_coeffs(const InterpolantSchedule& sched, double t) {
  if (!(t > 0.0 && t < 1.0)) throw DomainError("score_velocity_coeffs needs t in (0,1)");
  if (!(sched.alpha(t) > 0.0)) throw DomainError("score_velocity_coeffs needs alpha(t) > 0");
  const double k = sched.kappa(t);
  const double b = sched.beta(t);
  return {k, b * (k * b - sched.beta_dot(t))};
}

/// Drift of the stochastic sampler: b = v + sigma^2/(2 eta) (v - kappa x).
/// The memoryless choice collapses to 2v - kappa x exactly.
inline Vec drift_from_velocity(const InterpolantSchedule& sched, const DiffusionSchedule& diff,
                               const Vec& v, const Vec& x, double t) {
  if (!(t > 0.0 && t < 1.0)) throw DomainError("drift_from_velocity needs t in (0,1)");
  check_same_dim(v, x, "drift_from_velocity");
  switch (diff.kind()) {
    case DiffusionKind::Zero:
      return v;
    case DiffusionKind::Memoryless: {
      const double k = sched.kappa(t);
      Vec b(v.size());
      for (std::size_t i = 0; i < v.size(); ++i) b[i] = 2.0 * v[i] - k * x[i];
      return b;
    }
    case DiffusionKind::Custom: {
      const auto [k, eta] = score_velocity_coeffs(sched, t);
      const double denom = 2.0 * eta;
      if (denom == 0.0) throw DomainError("drift_from_velocity: zero denominator at t=" + std::to_string(t));
      const double c = diff.sigma(t) * diff.sigma(t) / denom;
      Vec b(v.size());
      for (std::size_t i = 0; i < v.size(); ++i) b[i] = v[i] + c * (v[i] - k * x[i]);
      return b;
    }
  }
  return v;
}

/// Velocity induced by an epsilon-parameterized denoiser evaluated at
/// diffusion time 1-t: v = kappa x - eta eps / beta.
inline Vec velocity_from_epsilon(const InterpolantSchedule& sched, const Vec& eps, const Vec& x,
                                 double t) {
  check_same_dim(eps, x, "velocity_from_epsilon");
  const double b = sched.beta(t);
  if (!(b > 0.0)) throw DomainError("velocity_from_epsilon needs beta(t) > 0 (t < 1)");
  const auto [k, eta] = score_velocity_coeffs(sched, t);
  Vec v(x.size());
  const double c = eta / b;
  for (std::size_t i = 0; i < x.size(); ++i) v[i] = k * x[i] - c * eps[i];
  return v;
}

}  // namespace flowctl

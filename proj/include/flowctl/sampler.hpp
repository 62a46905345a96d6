#pragma once

#include "flowctl/control_law.hpp"
#include "flowctl/running_cost.hpp"
#include "flowctl/schedule.hpp"

namespace flowctl {

enum class SamplerMode { Ode, Sde };

struct SamplerConfig {
  int steps = 28;
  SamplerMode mode = SamplerMode::Ode;
  DiffusionSchedule diffusion = DiffusionSchedule::zero();
  double t_start = 1e-3;  // schedule-singular quantities are never hit at t=0

  void validate() const {
    if (steps < 2) throw ConfigError("sampler needs at least 2 steps");
    if (!(t_start > 0.0 && t_start < 1.0)) throw ConfigError("t_start must lie in (0,1)");
  }
};

struct Trajectory {
  std::vector<double> times;   // t_0 < ... < t_N = 1
  std::vector<Vec> states;     // one per grid point
  std::vector<Vec> noises;     // Brownian increments, empty for ODE runs
  std::uint64_t seed = 0;

  int dim() const { return states.empty() ? 0 : static_cast<int>(states.front().size()); }
  int step_count() const { return static_cast<int>(times.size()) - 1; }
};

inline std::vector<double> time_grid(const SamplerConfig& cfg) {
  cfg.validate();
  std::vector<double> ts(static_cast<std::size_t>(cfg.steps) + 1);
  for (int i = 0; i <= cfg.steps; ++i)
    ts[static_cast<std::size_t>(i)] = cfg.t_start + (1.0 - cfg.t_start) * (double(i) / cfg.steps);
  ts.back() = 1.0;
  return ts;
}

namespace detail {

inline void check_state(const Vec& x, double t) {
  if (!all_finite(x))
    throw NumericalError("non-finite state at t=" + std::to_string(t));
}

// Shifted velocity of the single-pass controller. sigma_for_control is the
// diffusion coefficient entering the control law (0 cost weight skips the
// gradient evaluation entirely, which keeps the lambda=0 runs bit-identical
// to the base sampler).
inline void add_control_shift(Vec& v, const Vec& x, double t, const RunningCost& cost,
                              double lambda, double sigma_for_control, double velocity_factor) {
  if (lambda == 0.0) return;
  Vec g = cost.grad(x, t);
  if (g.size() != x.size())
    throw CostError("running-cost gradient dim " + std::to_string(g.size()) +
                    " does not match state dim " + std::to_string(x.size()));
  for (double& gi : g) gi *= lambda;
  const Vec u = instantaneous_control(sigma_for_control, t, g);
  axpy(velocity_factor, u, v);
}

}  // namespace detail

/// Explicit Euler on dX = v(X,t) dt.
template <class FieldT>
Trajectory sample_ode(const FieldT& field, const SamplerConfig& cfg, const Vec& x0) {
  if (cfg.mode != SamplerMode::Ode) throw ConfigError("sample_ode requires mode=ode");
  Trajectory traj;
  traj.times = time_grid(cfg);
  traj.states.reserve(traj.times.size());
  traj.states.push_back(x0);
  Vec x = x0;
  for (int i = 0; i < cfg.steps; ++i) {
    const double t = traj.times[static_cast<std::size_t>(i)];
    const double dt = traj.times[static_cast<std::size_t>(i) + 1] - t;
    const Vec v = field.eval(x, t);
    axpy(dt, v, x);
    detail::check_state(x, t);
    traj.states.push_back(x);
  }
  return traj;
}

/// Single-pass controlled ODE: Euler on v - (1-t) grad_f with f = lambda * cost.
/// lambda = 0 reproduces sample_ode bit for bit.
template <class FieldT>
Trajectory sample_controlled_ode(const FieldT& field, const SamplerConfig& cfg,
                                 const RunningCost& cost, double lambda, const Vec& x0) {
  if (cfg.mode != SamplerMode::Ode) throw ConfigError("sample_controlled_ode requires mode=ode");
  Trajectory traj;
  traj.times = time_grid(cfg);
  traj.states.push_back(x0);
  Vec x = x0;
  for (int i = 0; i < cfg.steps; ++i) {
    const double t = traj.times[static_cast<std::size_t>(i)];
    const double dt = traj.times[static_cast<std::size_t>(i) + 1] - t;
    Vec v = field.eval(x, t);
    detail::add_control_shift(v, x, t, cost, lambda, /*sigma_for_control=*/1.0,
                              /*velocity_factor=*/1.0);
    axpy(dt, v, x);
    detail::check_state(x, t);
    traj.states.push_back(x);
  }
  return traj;
}

namespace detail {

// Euler-Maruyama core shared by fresh sampling and tape replay.
template <class FieldT, class NoiseAt>
Trajectory run_sde(const FieldT& field, const InterpolantSchedule& sched, const SamplerConfig& cfg,
                   const RunningCost* cost, double lambda, const Vec& x0, std::uint64_t seed,
                   NoiseAt&& noise_at) {
  if (cfg.mode != SamplerMode::Sde) throw ConfigError("sde sampler requires mode=sde");
  if (cost && cfg.diffusion.kind() != DiffusionKind::Memoryless)
    throw ConfigError("controlled sde sampling requires the memoryless diffusion schedule");
  Trajectory traj;
  traj.seed = seed;
  traj.times = time_grid(cfg);
  traj.states.push_back(x0);
  traj.noises.reserve(static_cast<std::size_t>(cfg.steps));
  Vec x = x0;
  for (int i = 0; i < cfg.steps; ++i) {
    const double t = traj.times[static_cast<std::size_t>(i)];
    const double dt = traj.times[static_cast<std::size_t>(i) + 1] - t;
    const double sigma = cfg.diffusion.sigma(t);
    Vec v = field.eval(x, t);
    if (cost)
      add_control_shift(v, x, t, *cost, lambda, /*sigma_for_control=*/sigma,
                        /*velocity_factor=*/0.5 * sigma);
    const Vec b = drift_from_velocity(sched, cfg.diffusion, v, x, t);
    Vec xi = noise_at(i, x.size());
    axpy(dt, b, x);
    axpy(sigma * std::sqrt(dt), xi, x);
    detail::check_state(x, t);
    traj.states.push_back(x);
    traj.noises.push_back(std::move(xi));
  }
  return traj;
}

}  // namespace detail

/// Euler-Maruyama on dX = b(X,t) dt + sigma(t) dB with recorded increments.
template <class FieldT>
Trajectory sample_sde(const FieldT& field, const InterpolantSchedule& sched,
                      const SamplerConfig& cfg, const Vec& x0, std::uint64_t seed) {
  const std::uint64_t key = mix_key(seed, 0x73646521ULL);
  return detail::run_sde(field, sched, cfg, nullptr, 0.0, x0, seed,
                         [key](int step, std::size_t d) {
                           return normal_vec(key, static_cast<std::uint64_t>(step) * d, d);
                         });
}

/// Controlled variant: velocity shifted by (sigma/2) u*_t with
/// u*_t = -sigma (1-t) grad(lambda f). lambda = 0 reduces to sample_sde
/// bitwise under the same seed.
template <class FieldT>
Trajectory sample_controlled_sde(const FieldT& field, const InterpolantSchedule& sched,
                                 const SamplerConfig& cfg, const RunningCost& cost, double lambda,
                                 const Vec& x0, std::uint64_t seed) {
  const std::uint64_t key = mix_key(seed, 0x73646521ULL);
  return detail::run_sde(field, sched, cfg, &cost, lambda, x0, seed,
                         [key](int step, std::size_t d) {
                           return normal_vec(key, static_cast<std::uint64_t>(step) * d, d);
                         });
}

/// Re-runs the discrete forward map along a recorded noise tape. States come
/// out bitwise identical to the original run.
template <class FieldT>
Trajectory replay_sde(const FieldT& field, const InterpolantSchedule& sched,
                      const SamplerConfig& cfg, const Vec& x0, const std::vector<Vec>& noises,
                      std::uint64_t seed = 0) {
  if (static_cast<int>(noises.size()) != cfg.steps)
    throw GridMismatch("replay tape has " + std::to_string(noises.size()) + " steps, grid has " +
                       std::to_string(cfg.steps));
  return detail::run_sde(field, sched, cfg, nullptr, 0.0, x0, seed,
                         [&noises](int step, std::size_t) { return noises[static_cast<std::size_t>(step)]; });
}

}  // namespace flowctl

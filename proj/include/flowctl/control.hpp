#pragma once

#include "flowctl/field.hpp"
#include "flowctl/optimizer.hpp"
#include "flowctl/sampler.hpp"
#include "flowctl/target.hpp"

namespace flowctl {

// ---------------------------------------------------------------------------
// Lean adjoint along a frozen trajectory.
// ---------------------------------------------------------------------------

struct AdjointState {
  std::vector<double> times;  // trajectory grid (stored forward, filled backward)
  std::vector<Vec> values;    // adjoint per grid point
  Vec terminal;               // grad g at the endpoint
};

/// grad_x b(x,t)^T a for the drift of the given diffusion schedule. The
/// velocity Jacobian enters through the field's reverse pass; the scaling
/// part of the correction term is handled analytically.
template <class FieldT>
Vec drift_jacobian_tvp(const FieldT& field, const InterpolantSchedule& sched,
                       const DiffusionSchedule& diff, const Vec& x, double t, const Vec& a) {
  switch (diff.kind()) {
    case DiffusionKind::Zero:
      return field.jvp_state(x, t, a);
    case DiffusionKind::Memoryless: {
      Vec r = field.jvp_state(x, t, a);
      const double k = sched.kappa(t);
      for (std::size_t i = 0; i < r.size(); ++i) r[i] = 2.0 * r[i] - k * a[i];
      return r;
    }
    case DiffusionKind::Custom: {
      const auto [k, eta] = score_velocity_coeffs(sched, t);
      if (eta == 0.0) throw DomainError("drift jacobian: zero denominator");
      const double c = diff.sigma(t) * diff.sigma(t) / (2.0 * eta);
      Vec r = field.jvp_state(x, t, a);
      for (std::size_t i = 0; i < r.size(); ++i) r[i] = (1.0 + c) * r[i] - c * k * a[i];
      return r;
    }
  }
  return field.jvp_state(x, t, a);
}

using TerminalGrad = std::function<Vec(const Vec&)>;

/// Explicit Euler backward on the trajectory grid:
///   a_i = a_{i+1} + dt_i [grad b(X_i,t_i)^T a_{i+1} + grad f(X_i,t_i)],
///   a_N = grad g(X_N).
/// Control-dependent Jacobian terms are dropped: only the base drift enters.
template <class FieldT>
AdjointState lean_adjoint_backward(const FieldT& field, const InterpolantSchedule& sched,
                                   const DiffusionSchedule& diff, const Trajectory& traj,
                                   const RunningCost* cost, double lambda,
                                   const TerminalGrad& terminal_grad = {}) {
  const int n = traj.step_count();
  if (n < 1 || traj.states.size() != traj.times.size())
    throw GridMismatch("lean adjoint needs a populated trajectory");
  const std::size_t d = traj.states.front().size();

  AdjointState adj;
  adj.times = traj.times;
  adj.values.assign(traj.times.size(), Vec(d, 0.0));
  adj.terminal = terminal_grad ? terminal_grad(traj.states.back()) : Vec(d, 0.0);
  if (adj.terminal.size() != d) throw DimensionMismatch("terminal gradient dim mismatch");
  adj.values.back() = adj.terminal;

  for (int i = n - 1; i >= 0; --i) {
    const double t = traj.times[static_cast<std::size_t>(i)];
    const double dt = traj.times[static_cast<std::size_t>(i) + 1] - t;
    const Vec& x = traj.states[static_cast<std::size_t>(i)];
    const Vec& a_next = adj.values[static_cast<std::size_t>(i) + 1];
    Vec rhs = drift_jacobian_tvp(field, sched, diff, x, t, a_next);
    if (cost && lambda != 0.0) {
      Vec gf = cost->grad(x, t);
      if (gf.size() != d) throw CostError("running-cost gradient dim mismatch in adjoint");
      axpy(lambda, gf, rhs);
    }
    Vec a = a_next;
    axpy(dt, rhs, a);
    if (!all_finite(a)) throw NumericalError("non-finite adjoint at t=" + std::to_string(t));
    adj.values[static_cast<std::size_t>(i)] = std::move(a);
  }
  return adj;
}

// ---------------------------------------------------------------------------
// Adjoint Matching regression.
// ---------------------------------------------------------------------------

/// Grid-weighted mean over the subsampled steps of
///   1/2 || u(X_i, t_i) + sigma(t_i) a(t_i) ||^2.
/// The target is a constant of the regression; no gradient flows into it.
inline LossAndGrad am_loss(const Mlp& control, const Trajectory& traj, const AdjointState& adj,
                           const DiffusionSchedule& diff, const std::vector<int>& subsample) {
  if (adj.times.size() != traj.times.size() || adj.values.size() != traj.states.size())
    throw GridMismatch("adjoint grid does not match trajectory grid");
  if (subsample.empty()) throw GridMismatch("am_loss needs a nonempty subsample");

  LossAndGrad out;
  out.grad.assign(static_cast<std::size_t>(control.param_count()), 0.0);
  double wsum = 0.0;
  for (int i : subsample) {
    if (i < 0 || i >= traj.step_count()) throw GridMismatch("subsample index outside the grid");
    wsum += traj.times[static_cast<std::size_t>(i) + 1] - traj.times[static_cast<std::size_t>(i)];
  }
  for (int i : subsample) {
    const double t = traj.times[static_cast<std::size_t>(i)];
    const double w = (traj.times[static_cast<std::size_t>(i) + 1] - t) / wsum;
    const double sigma = diff.sigma(t);
    const Vec& x = traj.states[static_cast<std::size_t>(i)];
    Vec r = control.eval(x, t);
    axpy(sigma, adj.values[static_cast<std::size_t>(i)], r);  // u + sigma a
    out.loss += 0.5 * w * sq_norm(r);
    for (double& v : r) v *= w;
    control.backward(x, t, r, &out.grad, nullptr);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Inference-time composition and the fine-tuning loop.
// ---------------------------------------------------------------------------

/// Velocity with the learned control folded in: v + (sigma_mem/2) u.
template <class FieldT, class ControlT>
struct ControlledVelocity {
  const FieldT& base;
  const ControlT& control;
  InterpolantSchedule sched;

  int state_dim() const { return base.state_dim(); }

  Vec eval(const Vec& x, double t) const {
    Vec v = base.eval(x, t);
    axpy(0.5 * sigma_mem(sched, t), control.eval(x, t), v);
    return v;
  }
};

/// ODE sampling with the trained control; a zero control net reproduces the
/// base sampler bit for bit.
template <class FieldT>
Trajectory apply_control_inference(const FieldT& field, const Mlp& control,
                                   const InterpolantSchedule& sched, const SamplerConfig& cfg,
                                   const Vec& x0) {
  ControlledVelocity<FieldT, Mlp> dyn{field, control, sched};
  return sample_ode(dyn, cfg, x0);
}

struct AMConfig {
  double lambda = 1.0;
  int iterations = 300;
  int batch_trajectories = 5;
  int subsample_steps = 16;
  std::vector<int> control_hidden = {32, 32};
  AdamWConfig opt{1e-3, 0.95, 0.999, 1e-8, 0.01};
  SamplerConfig sampler{};  // steps and t_start; mode/diffusion are forced here
  int checkpoint_every = 0;
  double diverge_above = 1e3;

  void validate() const {
    if (iterations < 0 || batch_trajectories < 1) throw ConfigError("bad adjoint-matching config");
    if (subsample_steps < 1 || subsample_steps > sampler.steps)
      throw ConfigError("subsample_steps must lie in [1, sampler.steps]");
  }
};

struct FinetuneResult {
  Mlp control;
  std::vector<double> curve;
};

namespace detail {

// k distinct indices from [0, n) by partial Fisher-Yates, counter-driven
inline std::vector<int> draw_subsample(std::uint64_t key, int n, int k) {
  std::vector<int> pool(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) pool[static_cast<std::size_t>(i)] = i;
  for (int i = 0; i < k; ++i) {
    const auto j = i + static_cast<int>(uniform01(key, static_cast<std::uint64_t>(i)) * (n - i));
    std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(std::min(j, n - 1))]);
  }
  pool.resize(static_cast<std::size_t>(k));
  return pool;
}

}  // namespace detail

/// Adjoint Matching: per iteration, sample fresh memoryless-SDE trajectories
/// under the current control, integrate the lean adjoint backward along them,
/// and take one optimizer step regressing the control onto -sigma_mem a.
/// The base field is frozen throughout; terminal cost is zero.
template <class FieldT>
FinetuneResult finetune_adjoint_matching(const FieldT& field, const InterpolantSchedule& sched,
                                         const RunningCost& cost, const AMConfig& cfg,
                                         std::uint64_t seed,
                                         const std::function<void(int, const Mlp&)>& on_checkpoint = {}) {
  cfg.validate();
  const int d = field.state_dim();
  const auto diff = DiffusionSchedule::memoryless(sched);
  SamplerConfig scfg = cfg.sampler;
  scfg.mode = SamplerMode::Sde;
  scfg.diffusion = diff;

  FinetuneResult result{Mlp(d, cfg.control_hidden, mix_key(seed, 0x696e6974ULL),
                            /*zero_last_layer=*/true),
                        {}};
  Mlp& control = result.control;
  AdamW opt(control.param_count(), cfg.opt);
  const std::size_t np = static_cast<std::size_t>(control.param_count());
  const int batch = cfg.batch_trajectories;

  std::vector<std::vector<double>> grads(static_cast<std::size_t>(batch));
  std::vector<double> losses(static_cast<std::size_t>(batch));

  for (int iter = 0; iter < cfg.iterations; ++iter) {
    const auto subsample =
        detail::draw_subsample(mix_key(seed, 0x737562ULL, static_cast<std::uint64_t>(iter)),
                               scfg.steps, cfg.subsample_steps);
    ControlledVelocity<FieldT, Mlp> dyn{field, control, sched};
    for_chunks(static_cast<std::size_t>(batch), 1, [&](std::size_t b, std::size_t, std::size_t) {
      const std::uint64_t traj_key =
          mix_key(seed, static_cast<std::uint64_t>(iter) * batch + b, 0x616d74ULL);
      const Vec x0 = sample_base(traj_key, 0, d);
      const Trajectory traj = sample_sde(dyn, sched, scfg, x0, traj_key);
      const AdjointState adj = lean_adjoint_backward(field, sched, diff, traj, &cost, cfg.lambda);
      LossAndGrad lg = am_loss(control, traj, adj, diff, subsample);
      losses[b] = lg.loss;
      grads[b] = std::move(lg.grad);
    });
    double loss = 0.0;
    std::vector<double> grad(np, 0.0);
    for (int b = 0; b < batch; ++b) {
      loss += losses[static_cast<std::size_t>(b)] / batch;
      for (std::size_t j = 0; j < np; ++j) grad[j] += grads[static_cast<std::size_t>(b)][j] / batch;
    }
    if (!std::isfinite(loss) || loss > cfg.diverge_above)
      throw TrainingDiverged("adjoint-matching loss " + std::to_string(loss) + " at iteration " +
                             std::to_string(iter));
    opt.step(control.params(), grad);
    result.curve.push_back(loss);
    if (on_checkpoint && cfg.checkpoint_every > 0 && (iter + 1) % cfg.checkpoint_every == 0)
      on_checkpoint(iter + 1, control);
  }
  return result;
}

}  // namespace flowctl

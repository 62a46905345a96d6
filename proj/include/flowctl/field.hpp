#pragma once

#include <cassert>

#include "flowctl/common.hpp"
#include "flowctl/schedule.hpp"

namespace flowctl {

// ---------------------------------------------------------------------------
// Small fully-connected net v(x, t): input is the state with t appended as a
// raw scalar, hidden layers are tanh, output is linear with the state's
// dimension. Parameter and state gradients come from hand-rolled reverse
// accumulation, so Jacobian-transpose products along frozen trajectories are
// exact rather than finite-differenced.
// ---------------------------------------------------------------------------

class Mlp {
 public:
  Mlp(int state_dim, std::vector<int> hidden, std::uint64_t init_seed, bool zero_last_layer = false)
      : d_(state_dim) {
    if (state_dim < 1) throw DimensionMismatch("state_dim must be >= 1");
    if (hidden.empty()) throw ConfigError("mlp needs at least one hidden layer");
    widths_.push_back(d_ + 1);  // time appended to the state
    for (int h : hidden) {
      if (h < 1) throw ConfigError("hidden width must be >= 1");
      widths_.push_back(h);
    }
    widths_.push_back(d_);

    offsets_.resize(layer_count());
    int total = 0;
    for (int l = 0; l < layer_count(); ++l) {
      offsets_[static_cast<std::size_t>(l)] = total;
      total += fan_out(l) * fan_in(l) + fan_out(l);
    }
    theta_.assign(static_cast<std::size_t>(total), 0.0);

    const std::uint64_t key = mix_key(0x666c6f77ULL, init_seed);
    std::uint64_t ctr = 0;
    for (int l = 0; l < layer_count(); ++l) {
      const double scale = 1.0 / std::sqrt(static_cast<double>(fan_in(l)));
      const bool zero = zero_last_layer && l == layer_count() - 1;
      double* w = weights(l);
      for (int i = 0; i < fan_out(l) * fan_in(l); ++i, ++ctr)
        w[i] = zero ? 0.0 : scale * normal01(key, ctr);
      // biases start at zero
    }
  }

  int state_dim() const { return d_; }
  int layer_count() const { return static_cast<int>(widths_.size()) - 1; }
  int param_count() const { return static_cast<int>(theta_.size()); }

  std::vector<double>& params() { return theta_; }
  const std::vector<double>& params() const { return theta_; }

  std::vector<int> hidden_widths() const {
    return {widths_.begin() + 1, widths_.end() - 1};
  }

  Vec eval(const Vec& x, double t) const {
    check_input(x);
    thread_local Vec a, z;  // scratch; the result is copied out
    a.assign(x.begin(), x.end());
    a.push_back(t);
    for (int l = 0; l < layer_count(); ++l) {
      affine(l, a, z);
      if (l + 1 < layer_count())
        for (double& v : z) v = std::tanh(v);
      a.swap(z);
    }
    return a;
  }

  /// Reverse pass from an output cotangent. Adds dL/dtheta into grad_params
  /// (when non-null) and writes dL/dx into grad_x (when non-null).
  void backward(const Vec& x, double t, const Vec& out_cotangent,
                std::vector<double>* grad_params, Vec* grad_x) const {
    check_input(x);
    if (static_cast<int>(out_cotangent.size()) != d_)
      throw DimensionMismatch("cotangent dim != output dim");
    if (grad_params && static_cast<int>(grad_params->size()) != param_count())
      throw DimensionMismatch("grad_params has wrong size");

    // forward, keeping post-activation values per layer
    std::vector<Vec> acts(static_cast<std::size_t>(layer_count()) + 1);
    acts[0] = augment(x, t);
    for (int l = 0; l < layer_count(); ++l) {
      affine(l, acts[static_cast<std::size_t>(l)], acts[static_cast<std::size_t>(l) + 1]);
      if (l + 1 < layer_count())
        for (double& v : acts[static_cast<std::size_t>(l) + 1]) v = std::tanh(v);
    }

    Vec delta = out_cotangent;
    for (int l = layer_count() - 1; l >= 0; --l) {
      const Vec& in = acts[static_cast<std::size_t>(l)];
      if (grad_params) {
        double* gw = grad_params->data() + offsets_[static_cast<std::size_t>(l)];
        double* gb = gw + fan_out(l) * fan_in(l);
        for (int i = 0; i < fan_out(l); ++i) {
          const double di = delta[static_cast<std::size_t>(i)];
          double* row = gw + i * fan_in(l);
          for (int j = 0; j < fan_in(l); ++j) row[j] += di * in[static_cast<std::size_t>(j)];
          gb[i] += di;
        }
      }
      if (l == 0 && !grad_x) break;
      const double* w = weights(l);
      Vec prev(static_cast<std::size_t>(fan_in(l)), 0.0);
      for (int i = 0; i < fan_out(l); ++i) {
        const double di = delta[static_cast<std::size_t>(i)];
        const double* row = w + i * fan_in(l);
        for (int j = 0; j < fan_in(l); ++j) prev[static_cast<std::size_t>(j)] += di * row[j];
      }
      if (l > 0) {
        // through tanh: in holds the post-activation values
        for (int j = 0; j < fan_in(l); ++j)
          prev[static_cast<std::size_t>(j)] *= 1.0 - in[static_cast<std::size_t>(j)] * in[static_cast<std::size_t>(j)];
      }
      delta.swap(prev);
    }
    if (grad_x) grad_x->assign(delta.begin(), delta.begin() + d_);  // drop the time slot
  }

  /// Exact state-Jacobian-transpose product: grad_x (a . v(x,t)).
  Vec jvp_state(const Vec& x, double t, const Vec& cotangent) const {
    Vec gx;
    backward(x, t, cotangent, nullptr, &gx);
    return gx;
  }

 private:
  void check_input(const Vec& x) const {
    if (static_cast<int>(x.size()) != d_)
      throw DimensionMismatch("state dim " + std::to_string(x.size()) + " != " + std::to_string(d_));
  }

  Vec augment(const Vec& x, double t) const {
    Vec a(x);
    a.push_back(t);
    return a;
  }

  int fan_in(int l) const { return widths_[static_cast<std::size_t>(l)]; }
  int fan_out(int l) const { return widths_[static_cast<std::size_t>(l) + 1]; }

  double* weights(int l) { return theta_.data() + offsets_[static_cast<std::size_t>(l)]; }
  const double* weights(int l) const { return theta_.data() + offsets_[static_cast<std::size_t>(l)]; }
  const double* biases(int l) const { return weights(l) + fan_out(l) * fan_in(l); }

  void affine(int l, const Vec& in, Vec& out) const {
    const double* w = weights(l);
    const double* b = biases(l);
    out.resize(static_cast<std::size_t>(fan_out(l)));
    for (int i = 0; i < fan_out(l); ++i) {
      const double* row = w + i * fan_in(l);
      double s = b[i];
      for (int j = 0; j < fan_in(l); ++j) s += row[j] * in[static_cast<std::size_t>(j)];
      out[static_cast<std::size_t>(i)] = s;
    }
  }

  int d_;
  std::vector<int> widths_;
  std::vector<int> offsets_;
  std::vector<double> theta_;
};

using VectorFieldNet = Mlp;
using ControlNet = Mlp;

// ---------------------------------------------------------------------------
// Reference-path pieces.
// ---------------------------------------------------------------------------

struct EndpointPair {
  Vec x0;  // base draw
  Vec x1;  // target draw
};

/// Pathwise velocity of the linear interpolant: beta_dot x0 + alpha_dot x1.
inline Vec conditional_velocity(const InterpolantSchedule& sched, const EndpointPair& pair, double t) {
  check_same_dim(pair.x0, pair.x1, "conditional_velocity");
  const double bd = sched.beta_dot(t);
  const double ad = sched.alpha_dot(t);
  Vec u(pair.x0.size());
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = bd * pair.x0[i] + ad * pair.x1[i];
  return u;
}

/// X_t = beta_t x0 + alpha_t x1.
inline Vec interpolate(const InterpolantSchedule& sched, const EndpointPair& pair, double t) {
  check_same_dim(pair.x0, pair.x1, "interpolate");
  const double b = sched.beta(t);
  const double a = sched.alpha(t);
  Vec x(pair.x0.size());
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = b * pair.x0[i] + a * pair.x1[i];
  return x;
}

struct LossAndGrad {
  double loss = 0.0;
  std::vector<double> grad;
};

/// Conditional flow-matching loss: mean squared error against the pathwise
/// velocity, with the parameter gradient of that mean. The batch is processed
/// in fixed chunks reduced in chunk order, so the result does not depend on
/// the worker count.
inline LossAndGrad cfm_loss(const Mlp& field, const InterpolantSchedule& sched,
                            const std::vector<EndpointPair>& batch, const std::vector<double>& times) {
  if (batch.empty()) throw ConfigError("cfm_loss: empty batch");
  if (batch.size() != times.size()) throw GridMismatch("cfm_loss: batch/times length mismatch");
  const std::size_t grain = 32;
  const std::size_t chunks = (batch.size() + grain - 1) / grain;
  const std::size_t np = static_cast<std::size_t>(field.param_count());
  std::vector<std::vector<double>> grads(chunks);
  std::vector<double> losses(chunks, 0.0);
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  for_chunks(batch.size(), grain, [&](std::size_t c, std::size_t lo, std::size_t hi) {
    grads[c].assign(np, 0.0);
    for (std::size_t i = lo; i < hi; ++i) {
      const double t = times[i];
      const Vec xt = interpolate(sched, batch[i], t);
      const Vec u = conditional_velocity(sched, batch[i], t);
      const Vec v = field.eval(xt, t);
      Vec r = sub(v, u);
      losses[c] += sq_norm(r) * inv_b;
      for (double& g : r) g *= 2.0 * inv_b;
      field.backward(xt, t, r, &grads[c], nullptr);
    }
  });
  LossAndGrad out;
  out.grad.assign(np, 0.0);
  for (std::size_t c = 0; c < chunks; ++c) {
    out.loss += losses[c];
    for (std::size_t j = 0; j < np; ++j) out.grad[j] += grads[c][j];
  }
  return out;
}

}  // namespace flowctl

#pragma once

// Shared trained fixtures for the heavier tests. Training happens once per
// process and is fully seeded.

#include <memory>

#include "flowctl/control.hpp"
#include "flowctl/costs.hpp"
#include "flowctl/metrics.hpp"
#include "flowctl/sampler.hpp"
#include "flowctl/train.hpp"

namespace fixtures {

using namespace flowctl;

inline const ToyTarget& gaussian_target() {
  static const ToyTarget t = ToyTarget::gaussian({1.0, -0.5}, 0.6);
  return t;
}

inline const ToyTarget& mixture_target() {
  static const ToyTarget t = ToyTarget::mixture({{-1.2, 0.0}, {1.2, 0.0}}, 0.35);
  return t;
}

inline const Mlp& gaussian_field() {
  static const Mlp field = [] {
    Mlp f(2, {48, 48}, 11);
    TrainConfig cfg;
    cfg.steps = 4000;
    cfg.batch = 128;
    cfg.opt.lr = 4e-3;
    cfg.seed = 11;
    train_cfm(f, InterpolantSchedule::rectified_flow(), gaussian_target(), cfg);
    return f;
  }();
  return field;
}

inline const Mlp& mixture_field() {
  static const Mlp field = [] {
    Mlp f(2, {64, 64}, 12);
    TrainConfig cfg;
    cfg.steps = 9000;
    cfg.batch = 256;
    cfg.opt.lr = 4e-3;
    cfg.seed = 12;
    train_cfm(f, InterpolantSchedule::rectified_flow(), mixture_target(), cfg);
    return f;
  }();
  return field;
}

// Standard toy scene: 2 subjects, 2 map slots each, 8x8 grid.
inline std::shared_ptr<const MapHead> toy_head() {
  static const auto head = [] {
    MapHeadConfig cfg;
    cfg.seed = 7;
    return std::make_shared<const MapHead>(cfg);
  }();
  return head;
}

// Unseen scene: 3 subjects, fresh head seed.
inline std::shared_ptr<const MapHead> unseen_head() {
  static const auto head = [] {
    MapHeadConfig cfg;
    cfg.subjects = 3;
    cfg.seed = 19;
    return std::make_shared<const MapHead>(cfg);
  }();
  return head;
}

inline RunningCost toy_cost(TimeWeight weight) {
  return make_scene_cost(toy_head(), CostKind::Focus, weight,
                         InterpolantSchedule::rectified_flow());
}

// endpoint focus for a batch of ODE trajectories from seeded base draws
template <class FieldT>
inline std::vector<double> endpoint_focus(const FieldT& field, const MapHead& head,
                                          const SamplerConfig& cfg, const RunningCost* cost,
                                          double lambda, int n_paths, std::uint64_t seed0) {
  std::vector<double> out(static_cast<std::size_t>(n_paths));
  for_chunks(static_cast<std::size_t>(n_paths), 8, [&](std::size_t, std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      const Vec x0 = sample_base(seed0, i, field.state_dim());
      const Trajectory traj = cost ? sample_controlled_ode(field, cfg, *cost, lambda, x0)
                                   : sample_ode(field, cfg, x0);
      out[i] = focus_cost(head.maps_from_state(traj.states.back()));
    }
  });
  return out;
}

template <class FieldT>
inline std::vector<Vec> ode_endpoints(const FieldT& field, const SamplerConfig& cfg, int n,
                                      std::uint64_t seed0) {
  std::vector<Vec> out(static_cast<std::size_t>(n));
  for_chunks(static_cast<std::size_t>(n), 16, [&](std::size_t, std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i)
      out[i] = sample_ode(field, cfg, sample_base(seed0, i, field.state_dim())).states.back();
  });
  return out;
}

}  // namespace fixtures

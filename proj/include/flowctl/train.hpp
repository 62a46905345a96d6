#pragma once

#include "flowctl/field.hpp"
#include "flowctl/optimizer.hpp"
#include "flowctl/target.hpp"

namespace flowctl {

struct TrainConfig {
  int steps = 4000;
  int batch = 128;
  std::uint64_t seed = 0;
  AdamWConfig opt{3e-3, 0.95, 0.999, 1e-8, 0.01};
  double lr_final_frac = 0.05;  // cosine decay floor as a fraction of opt.lr
  double diverge_above = 1e3;
  double loss_threshold = 0.5;  // final smoothed loss the toy tasks must reach
  int smooth_window = 50;
};

inline double smoothed_tail(const std::vector<double>& curve, int window) {
  if (curve.empty()) return 0.0;
  const std::size_t w = std::min<std::size_t>(curve.size(), static_cast<std::size_t>(window));
  double s = 0.0;
  for (std::size_t i = curve.size() - w; i < curve.size(); ++i) s += curve[i];
  return s / static_cast<double>(w);
}

/// Regresses the field onto the pathwise conditional velocity. Endpoints and
/// times are indexed draws, so the run is reproducible for a fixed seed.
inline std::vector<double> train_cfm(Mlp& field, const InterpolantSchedule& sched,
                                     const ToyTarget& target, const TrainConfig& cfg) {
  if (target.dim() != field.state_dim())
    throw DimensionMismatch("target dim does not match field dim");
  std::vector<double> curve;
  curve.reserve(static_cast<std::size_t>(std::max(0, cfg.steps)));
  if (cfg.steps <= 0) return curve;

  AdamW opt(field.param_count(), cfg.opt);
  const int d = field.state_dim();
  const std::uint64_t time_key = mix_key(cfg.seed, 0x74696d65ULL);
  std::vector<EndpointPair> batch(static_cast<std::size_t>(cfg.batch));
  std::vector<double> times(static_cast<std::size_t>(cfg.batch));
  std::uint64_t sample_index = 0;

  for (int step = 0; step < cfg.steps; ++step) {
    if (cfg.lr_final_frac < 1.0) {
      const double cosv = 0.5 * (1.0 + std::cos(3.14159265358979323846 * step / cfg.steps));
      opt.set_lr(cfg.opt.lr * (cfg.lr_final_frac + (1.0 - cfg.lr_final_frac) * cosv));
    }
    for (int b = 0; b < cfg.batch; ++b, ++sample_index) {
      batch[static_cast<std::size_t>(b)] = {sample_base(cfg.seed, sample_index, d),
                                            target.sample(cfg.seed, sample_index)};
      times[static_cast<std::size_t>(b)] = uniform01(time_key, sample_index);
    }
    LossAndGrad lg = cfm_loss(field, sched, batch, times);
    if (!std::isfinite(lg.loss) || lg.loss > cfg.diverge_above)
      throw TrainingDiverged("cfm loss " + std::to_string(lg.loss) + " at step " + std::to_string(step));
    opt.step(field.params(), lg.grad);
    curve.push_back(lg.loss);
  }
  return curve;
}

}  // namespace flowctl

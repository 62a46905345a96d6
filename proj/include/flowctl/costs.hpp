#pragma once

#include <limits>

#include "flowctl/running_cost.hpp"
#include "flowctl/schedule.hpp"

namespace flowctl {

// ---------------------------------------------------------------------------
// Points on the probability simplex over a spatial grid.
// ---------------------------------------------------------------------------

struct ProbMap {
  Vec weights;  // row-major, length rows*cols
  int rows = 0;
  int cols = 0;

  ProbMap() = default;
  ProbMap(Vec w, int h, int wd) : weights(std::move(w)), rows(h), cols(wd) {
    if (rows < 1 || cols < 1 || weights.size() != static_cast<std::size_t>(rows) * cols)
      throw GridMismatch("prob map shape does not match weight count");
    double sum = 0.0;
    for (double v : weights) {
      if (v < 0.0) throw DomainError("prob map has a negative entry");
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9)
      throw DomainError("prob map mass " + std::to_string(sum) + " != 1");
  }

  int grid() const { return rows * cols; }
};

inline void check_same_grid(const ProbMap& a, const ProbMap& b, const char* where) {
  if (a.rows != b.rows || a.cols != b.cols)
    throw GridMismatch(std::string(where) + ": grid shapes differ");
}

struct SubjectMaps {
  int subject_id = 0;
  std::vector<ProbMap> maps;
  ProbMap mean_map;

  SubjectMaps(int id, std::vector<ProbMap> ms) : subject_id(id), maps(std::move(ms)) {
    if (maps.empty()) throw ConfigError("subject needs at least one map");
    for (const auto& m : maps) check_same_grid(m, maps.front(), "subject maps");
    Vec mean(maps.front().weights.size(), 0.0);
    const double inv = 1.0 / static_cast<double>(maps.size());
    for (const auto& m : maps)
      for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += inv * m.weights[i];
    mean_map = ProbMap(std::move(mean), maps.front().rows, maps.front().cols);
  }
};

using Scene = std::vector<SubjectMaps>;

// ---------------------------------------------------------------------------
// Divergences and the disentanglement cost.
// ---------------------------------------------------------------------------

/// Sum p_i log(p_i/q_i); +inf when q has a zero cell that p occupies.
inline double kl_div(const ProbMap& p, const ProbMap& q) {
  check_same_grid(p, q, "kl_div");
  double s = 0.0;
  for (std::size_t i = 0; i < p.weights.size(); ++i) {
    const double pi = p.weights[i];
    if (pi == 0.0) continue;
    if (q.weights[i] == 0.0) return std::numeric_limits<double>::infinity();
    s += pi * std::log(pi / q.weights[i]);
  }
  return std::max(0.0, s);
}

/// Generalized Jensen-Shannon divergence (1/n) sum KL(p_i || mean).
inline double jsd(const std::vector<ProbMap>& maps) {
  if (maps.empty()) throw ConfigError("jsd of an empty set");
  const std::size_t n = maps.size();
  if (n == 1) return 0.0;
  for (const auto& m : maps) check_same_grid(m, maps.front(), "jsd");
  Vec mean(maps.front().weights.size(), 0.0);
  for (const auto& m : maps)
    for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += m.weights[i] / static_cast<double>(n);
  ProbMap mixture(std::move(mean), maps.front().rows, maps.front().cols);
  double s = 0.0;
  for (const auto& m : maps) s += kl_div(m, mixture) / static_cast<double>(n);
  return s;
}

/// JSD normalized by its log(n) upper bound; 0 for a single map.
inline double jsd_normalized(const std::vector<ProbMap>& maps) {
  if (maps.size() <= 1) return jsd(maps);  // validates emptiness, returns 0
  return jsd(maps) / std::log(static_cast<double>(maps.size()));
}

/// Within-subject agreement plus between-subject separation, in [0,1];
/// 0 is perfect disentanglement.
inline double focus_cost(const Scene& scene) {
  if (scene.size() < 2) throw ConfigError("focus_cost needs at least 2 subjects");
  double within = 0.0;
  std::vector<ProbMap> means;
  means.reserve(scene.size());
  for (const auto& s : scene) {
    within += jsd_normalized(s.maps) / static_cast<double>(scene.size());
    means.push_back(s.mean_map);
  }
  return 0.5 * within + 0.5 * (1.0 - jsd_normalized(means));
}

/// gamma_reg * mean_s (1 - H(mean_s)/log G); discourages collapsed maps.
inline double entropy_regularizer(const Scene& scene, double gamma_reg) {
  if (gamma_reg < 0.0) throw ConfigError("gamma_reg must be >= 0");
  if (scene.empty() || gamma_reg == 0.0) return 0.0;
  const double logg = std::log(static_cast<double>(scene.front().mean_map.grid()));
  double acc = 0.0;
  for (const auto& s : scene) {
    double h = 0.0;
    for (double v : s.mean_map.weights)
      if (v > 0.0) h -= v * std::log(v);
    const double hn = logg > 0.0 ? h / logg : 1.0;
    acc += (1.0 - hn) / static_cast<double>(scene.size());
  }
  return gamma_reg * acc;
}

/// Mean pairwise cosine similarity of subject mean maps; lower is better.
inline double cosine_separation_cost(const Scene& scene) {
  if (scene.size() < 2) throw ConfigError("cosine_separation_cost needs at least 2 subjects");
  for (const auto& s : scene) check_same_grid(s.mean_map, scene.front().mean_map, "cosine_separation");
  double acc = 0.0;
  int pairs = 0;
  for (std::size_t a = 0; a < scene.size(); ++a)
    for (std::size_t b = a + 1; b < scene.size(); ++b) {
      const Vec& u = scene[a].mean_map.weights;
      const Vec& v = scene[b].mean_map.weights;
      acc += dot(u, v) / (norm2(u) * norm2(v));
      ++pairs;
    }
  return acc / pairs;
}

enum class CostKind { Focus, Cosine };

// ---------------------------------------------------------------------------
// Synthetic map head: turns a sampler state into per-subject probability maps
// through per-slot linear projections, a squared-distance softmax over grid
// anchors, and light Gaussian smoothing. Stands in for cross-attention
// extraction; swapping in a real backbone touches only this type.
// ---------------------------------------------------------------------------

struct MapHeadConfig {
  int grid_h = 8;
  int grid_w = 8;
  int subjects = 2;
  int maps_per_subject = 2;
  int state_dim = 2;
  double gamma = 24.0;        // softmax sharpness
  double smooth_width = 1.0;  // gaussian width in cells, 0 disables
  double proj_scale = 0.45;   // spread of random projections
  double slot_jitter = 0.15;  // relative scale spread of a subject's slots
  std::uint64_t seed = 7;
};

class MapHead {
 public:
  explicit MapHead(MapHeadConfig cfg) : cfg_(cfg) {
    if (cfg_.grid_h < 1 || cfg_.grid_w < 1) throw ConfigError("map head grid must be positive");
    if (cfg_.subjects < 1 || cfg_.maps_per_subject < 1)
      throw ConfigError("map head needs subjects and map slots");
    if (cfg_.state_dim < 1) throw ConfigError("map head state_dim must be >= 1");
    if (cfg_.gamma < 0.0) throw ConfigError("map head gamma must be >= 0");

    // anchors: cell centers over [-1,1]^2, row-major
    anchor_x_.resize(static_cast<std::size_t>(grid()));
    anchor_y_.resize(static_cast<std::size_t>(grid()));
    for (int r = 0; r < cfg_.grid_h; ++r)
      for (int c = 0; c < cfg_.grid_w; ++c) {
        anchor_x_[static_cast<std::size_t>(r * cfg_.grid_w + c)] = -1.0 + 2.0 * (c + 0.5) / cfg_.grid_w;
        anchor_y_[static_cast<std::size_t>(r * cfg_.grid_w + c)] = -1.0 + 2.0 * (r + 0.5) / cfg_.grid_h;
      }

    // one base projection per subject; its slots share the spatial pattern at
    // slightly different scales (like attention heads of one token)
    const std::uint64_t key = mix_key(cfg_.seed, 0x68656164ULL);
    std::uint64_t ctr = 0;
    proj_.resize(static_cast<std::size_t>(cfg_.subjects));
    for (int s = 0; s < cfg_.subjects; ++s) {
      std::vector<double> base(2 * static_cast<std::size_t>(cfg_.state_dim));
      for (double& v : base) v = cfg_.proj_scale * normal01(key, ctr++);
      auto& slots = proj_[static_cast<std::size_t>(s)];
      slots.resize(static_cast<std::size_t>(cfg_.maps_per_subject));
      for (int m = 0; m < cfg_.maps_per_subject; ++m) {
        const double scale = 1.0 + cfg_.slot_jitter * normal01(key, ctr++);
        auto& w = slots[static_cast<std::size_t>(m)];
        w = base;
        for (double& v : w) v *= scale;
      }
    }
    build_smoothing();
  }

  /// Same head with explicit projections ([subject][slot][2*state_dim]),
  /// e.g. from a real attention extractor.
  MapHead(MapHeadConfig cfg, std::vector<std::vector<std::vector<double>>> projections)
      : MapHead(cfg) {
    if (static_cast<int>(projections.size()) != cfg_.subjects)
      throw DimensionMismatch("projection table: wrong subject count");
    for (const auto& slots : projections) {
      if (static_cast<int>(slots.size()) != cfg_.maps_per_subject)
        throw DimensionMismatch("projection table: wrong slot count");
      for (const auto& w : slots)
        if (w.size() != 2 * static_cast<std::size_t>(cfg_.state_dim))
          throw DimensionMismatch("projection table: wrong projection size");
    }
    proj_ = std::move(projections);
  }

  const MapHeadConfig& config() const { return cfg_; }
  int grid() const { return cfg_.grid_h * cfg_.grid_w; }

  /// Projected anchor-space position of one subject/slot.
  std::pair<double, double> project(int subject, int slot, const Vec& x) const {
    check_state(x);
    const auto& w = proj_[static_cast<std::size_t>(subject)][static_cast<std::size_t>(slot)];
    double zx = 0.0, zy = 0.0;
    for (int j = 0; j < cfg_.state_dim; ++j) {
      zx += w[static_cast<std::size_t>(j)] * x[static_cast<std::size_t>(j)];
      zy += w[static_cast<std::size_t>(cfg_.state_dim + j)] * x[static_cast<std::size_t>(j)];
    }
    return {zx, zy};
  }

  Scene maps_from_state(const Vec& x) const {
    check_state(x);
    Scene scene;
    scene.reserve(static_cast<std::size_t>(cfg_.subjects));
    for (int s = 0; s < cfg_.subjects; ++s) {
      std::vector<ProbMap> maps;
      maps.reserve(static_cast<std::size_t>(cfg_.maps_per_subject));
      for (int m = 0; m < cfg_.maps_per_subject; ++m)
        maps.push_back(slot_map(s, m, x).to_prob_map(cfg_.grid_h, cfg_.grid_w));
      scene.emplace_back(s, std::move(maps));
    }
    return scene;
  }

  /// Cost of the selected kind on floored maps; the exact function the
  /// gradient below differentiates.
  double cost_value(CostKind kind, const Vec& x, double gamma_reg = 0.0) const {
    const auto maps = floored_maps(x);
    return cost_from(kind, maps, gamma_reg).first;
  }

  /// Exact reverse-accumulated gradient of cost_value w.r.t. the state.
  Vec grad_cost_state(CostKind kind, const Vec& x, double gamma_reg = 0.0) const {
    const auto maps = floored_maps(x);
    const auto [value, map_grads] = cost_from(kind, maps, gamma_reg);
    (void)value;
    Vec gx(x.size(), 0.0);
    for (int s = 0; s < cfg_.subjects; ++s)
      for (int m = 0; m < cfg_.maps_per_subject; ++m) {
        const auto& fwd = maps.fwd[idx(s, m)];
        Vec g = map_grads[idx(s, m)];
        backprop_map(fwd, g, s, m, gx);
      }
    return gx;
  }

 private:
  // forward tape for one slot map
  struct SlotForward {
    std::pair<double, double> z;
    Vec softmax;        // p
    Vec smoothed;       // y = S p (equals p when smoothing is off)
    double y_sum = 0.0;
    Vec renormed;       // q = y / y_sum
    Vec floored;        // qhat = max(q, eps) / sum
    double floor_sum = 0.0;

    ProbMap to_prob_map(int h, int w) const { return ProbMap(renormed, h, w); }
  };

  struct ForwardMaps {
    std::vector<SlotForward> fwd;  // subjects x slots, row-major
    std::vector<Vec> subject_mean;
    Vec mean_of_means;
  };

  static constexpr double kFloor = 1e-12;

  std::size_t idx(int s, int m) const {
    return static_cast<std::size_t>(s * cfg_.maps_per_subject + m);
  }

  void check_state(const Vec& x) const {
    if (static_cast<int>(x.size()) != cfg_.state_dim)
      throw DimensionMismatch("map head expects state dim " + std::to_string(cfg_.state_dim) +
                              ", got " + std::to_string(x.size()));
  }

  void build_smoothing() {
    if (cfg_.smooth_width <= 0.0) return;
    auto kernel_1d = [this](int n) {
      std::vector<double> k(static_cast<std::size_t>(n) * n, 0.0);
      const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * cfg_.smooth_width)));
      for (int i = 0; i < n; ++i) {
        double sum = 0.0;
        for (int j = std::max(0, i - radius); j <= std::min(n - 1, i + radius); ++j) {
          const double d = (i - j) / cfg_.smooth_width;
          const double w = std::exp(-0.5 * d * d);
          k[static_cast<std::size_t>(i * n + j)] = w;
          sum += w;
        }
        for (int j = 0; j < n; ++j) k[static_cast<std::size_t>(i * n + j)] /= sum;
      }
      return k;
    };
    krow_ = kernel_1d(cfg_.grid_w);
    kcol_ = kernel_1d(cfg_.grid_h);
  }

  // y = S p (col smoothing after row smoothing)
  Vec smooth(const Vec& p) const {
    if (cfg_.smooth_width <= 0.0) return p;
    const int h = cfg_.grid_h, w = cfg_.grid_w;
    Vec tmp(p.size(), 0.0), out(p.size(), 0.0);
    for (int r = 0; r < h; ++r)
      for (int c = 0; c < w; ++c) {
        double s = 0.0;
        for (int c2 = 0; c2 < w; ++c2)
          s += krow_[static_cast<std::size_t>(c * w + c2)] * p[static_cast<std::size_t>(r * w + c2)];
        tmp[static_cast<std::size_t>(r * w + c)] = s;
      }
    for (int c = 0; c < w; ++c)
      for (int r = 0; r < h; ++r) {
        double s = 0.0;
        for (int r2 = 0; r2 < h; ++r2)
          s += kcol_[static_cast<std::size_t>(r * h + r2)] * tmp[static_cast<std::size_t>(r2 * w + c)];
        out[static_cast<std::size_t>(r * w + c)] = s;
      }
    return out;
  }

  // g <- S^T g
  Vec smooth_transpose(const Vec& g) const {
    if (cfg_.smooth_width <= 0.0) return g;
    const int h = cfg_.grid_h, w = cfg_.grid_w;
    Vec tmp(g.size(), 0.0), out(g.size(), 0.0);
    for (int c = 0; c < w; ++c)
      for (int r2 = 0; r2 < h; ++r2) {
        double s = 0.0;
        for (int r = 0; r < h; ++r)
          s += kcol_[static_cast<std::size_t>(r * h + r2)] * g[static_cast<std::size_t>(r * w + c)];
        tmp[static_cast<std::size_t>(r2 * w + c)] = s;
      }
    for (int r = 0; r < h; ++r)
      for (int c2 = 0; c2 < w; ++c2) {
        double s = 0.0;
        for (int c = 0; c < w; ++c)
          s += krow_[static_cast<std::size_t>(c * w + c2)] * tmp[static_cast<std::size_t>(r * w + c)];
        out[static_cast<std::size_t>(r * w + c2)] = s;
      }
    return out;
  }

  SlotForward slot_map(int s, int m, const Vec& x) const {
    SlotForward f;
    f.z = project(s, m, x);
    const std::size_t g = static_cast<std::size_t>(grid());
    Vec logits(g);
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < g; ++j) {
      const double dx = anchor_x_[j] - f.z.first;
      const double dy = anchor_y_[j] - f.z.second;
      logits[j] = -cfg_.gamma * (dx * dx + dy * dy);
      mx = std::max(mx, logits[j]);
    }
    f.softmax.resize(g);
    double sum = 0.0;
    for (std::size_t j = 0; j < g; ++j) {
      f.softmax[j] = std::exp(logits[j] - mx);
      sum += f.softmax[j];
    }
    for (double& v : f.softmax) v /= sum;
    f.smoothed = smooth(f.softmax);
    f.y_sum = 0.0;
    for (double v : f.smoothed) f.y_sum += v;
    f.renormed.resize(g);
    for (std::size_t j = 0; j < g; ++j) f.renormed[j] = f.smoothed[j] / f.y_sum;
    f.floor_sum = 0.0;
    f.floored.resize(g);
    for (std::size_t j = 0; j < g; ++j) {
      f.floored[j] = std::max(f.renormed[j], kFloor);
      f.floor_sum += f.floored[j];
    }
    for (double& v : f.floored) v /= f.floor_sum;
    return f;
  }

  ForwardMaps floored_maps(const Vec& x) const {
    check_state(x);
    ForwardMaps fm;
    const std::size_t g = static_cast<std::size_t>(grid());
    fm.fwd.reserve(static_cast<std::size_t>(cfg_.subjects * cfg_.maps_per_subject));
    fm.subject_mean.assign(static_cast<std::size_t>(cfg_.subjects), Vec(g, 0.0));
    fm.mean_of_means.assign(g, 0.0);
    for (int s = 0; s < cfg_.subjects; ++s) {
      for (int m = 0; m < cfg_.maps_per_subject; ++m) {
        fm.fwd.push_back(slot_map(s, m, x));
        const Vec& q = fm.fwd.back().floored;
        for (std::size_t j = 0; j < g; ++j)
          fm.subject_mean[static_cast<std::size_t>(s)][j] += q[j] / cfg_.maps_per_subject;
      }
      for (std::size_t j = 0; j < g; ++j)
        fm.mean_of_means[j] += fm.subject_mean[static_cast<std::size_t>(s)][j] / cfg_.subjects;
    }
    return fm;
  }

  // cost value and its gradient w.r.t. each floored map
  std::pair<double, std::vector<Vec>> cost_from(CostKind kind, const ForwardMaps& fm,
                                                double gamma_reg) const {
    const std::size_t g = static_cast<std::size_t>(grid());
    const int S = cfg_.subjects;
    const int M = cfg_.maps_per_subject;
    if (S < 2) throw ConfigError("scene costs need at least 2 subjects");
    std::vector<Vec> grads(static_cast<std::size_t>(S * M), Vec(g, 0.0));
    double value = 0.0;

    if (kind == CostKind::Focus) {
      // within-subject normalized dispersion
      double within = 0.0;
      if (M >= 2) {
        const double wscale = 0.5 / (S * M * std::log(double(M)));
        for (int s = 0; s < S; ++s) {
          const Vec& mean = fm.subject_mean[static_cast<std::size_t>(s)];
          double acc = 0.0;
          for (int m = 0; m < M; ++m) {
            const Vec& q = fm.fwd[idx(s, m)].floored;
            for (std::size_t j = 0; j < g; ++j) {
              const double lr = std::log(q[j] / mean[j]);
              acc += q[j] * lr;
              grads[idx(s, m)][j] += wscale * lr;
            }
          }
          within += acc / (M * std::log(double(M)) * S);
        }
      }
      // between-subject separation via the means
      double between = 0.0;
      {
        const double bscale = -0.5 / (S * std::log(double(S)) * M);
        for (int s = 0; s < S; ++s) {
          const Vec& mean = fm.subject_mean[static_cast<std::size_t>(s)];
          for (std::size_t j = 0; j < g; ++j) {
            const double lr = std::log(mean[j] / fm.mean_of_means[j]);
            between += mean[j] * lr / (S * std::log(double(S)));
            for (int m = 0; m < M; ++m) grads[idx(s, m)][j] += bscale * lr;
          }
        }
      }
      value = 0.5 * within + 0.5 * (1.0 - between);
    } else {  // Cosine
      const int pairs = S * (S - 1) / 2;
      std::vector<double> norms(static_cast<std::size_t>(S));
      for (int s = 0; s < S; ++s) norms[static_cast<std::size_t>(s)] = norm2(fm.subject_mean[static_cast<std::size_t>(s)]);
      std::vector<Vec> mean_grads(static_cast<std::size_t>(S), Vec(g, 0.0));
      for (int a = 0; a < S; ++a)
        for (int b = a + 1; b < S; ++b) {
          const Vec& u = fm.subject_mean[static_cast<std::size_t>(a)];
          const Vec& v = fm.subject_mean[static_cast<std::size_t>(b)];
          const double nu = norms[static_cast<std::size_t>(a)], nv = norms[static_cast<std::size_t>(b)];
          const double cs = dot(u, v) / (nu * nv);
          value += cs / pairs;
          for (std::size_t j = 0; j < g; ++j) {
            mean_grads[static_cast<std::size_t>(a)][j] += (v[j] / (nu * nv) - cs * u[j] / (nu * nu)) / pairs;
            mean_grads[static_cast<std::size_t>(b)][j] += (u[j] / (nu * nv) - cs * v[j] / (nv * nv)) / pairs;
          }
        }
      for (int s = 0; s < S; ++s)
        for (int m = 0; m < M; ++m)
          for (std::size_t j = 0; j < g; ++j)
            grads[idx(s, m)][j] += mean_grads[static_cast<std::size_t>(s)][j] / M;
    }

    if (gamma_reg > 0.0) {
      const double logg = std::log(static_cast<double>(g));
      for (int s = 0; s < S; ++s) {
        const Vec& mean = fm.subject_mean[static_cast<std::size_t>(s)];
        double h = 0.0;
        for (std::size_t j = 0; j < g; ++j) h -= mean[j] * std::log(mean[j]);
        value += gamma_reg * (1.0 - h / logg) / S;
        const double scale = gamma_reg / (S * logg * M);
        for (std::size_t j = 0; j < g; ++j) {
          const double dj = (std::log(mean[j]) + 1.0) * scale;
          for (int m = 0; m < M; ++m) grads[idx(s, m)][j] += dj;
        }
      }
    }
    return {value, std::move(grads)};
  }

  // pulls a gradient on one floored map back to the state
  void backprop_map(const SlotForward& f, Vec& g, int s, int m, Vec& gx) const {
    const std::size_t n = g.size();
    // floored = max(renormed, eps) / floor_sum
    {
      double gd = 0.0;
      for (std::size_t j = 0; j < n; ++j) gd += g[j] * f.floored[j];
      for (std::size_t j = 0; j < n; ++j) {
        const double gy = (g[j] - gd) / f.floor_sum;
        g[j] = f.renormed[j] > kFloor ? gy : 0.0;
      }
    }
    // renormed = smoothed / y_sum
    {
      double gd = 0.0;
      for (std::size_t j = 0; j < n; ++j) gd += g[j] * f.renormed[j];
      for (std::size_t j = 0; j < n; ++j) g[j] = (g[j] - gd) / f.y_sum;
    }
    g = smooth_transpose(g);
    // softmax with logits_j = -gamma ||anchor_j - z||^2
    double gp = 0.0;
    for (std::size_t j = 0; j < n; ++j) gp += g[j] * f.softmax[j];
    double gzx = 0.0, gzy = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double glogit = f.softmax[j] * (g[j] - gp);
      gzx += glogit * 2.0 * cfg_.gamma * (anchor_x_[j] - f.z.first);
      gzy += glogit * 2.0 * cfg_.gamma * (anchor_y_[j] - f.z.second);
    }
    const auto& w = proj_[static_cast<std::size_t>(s)][static_cast<std::size_t>(m)];
    for (int j = 0; j < cfg_.state_dim; ++j)
      gx[static_cast<std::size_t>(j)] += gzx * w[static_cast<std::size_t>(j)] +
                                         gzy * w[static_cast<std::size_t>(cfg_.state_dim + j)];
  }

  MapHeadConfig cfg_;
  std::vector<std::vector<std::vector<double>>> proj_;  // [subject][slot][2*d]
  std::vector<double> anchor_x_, anchor_y_;
  std::vector<double> krow_, kcol_;
};

/// Free-function spelling of the head gradient.
inline Vec grad_cost_state(const MapHead& head, CostKind kind, const Vec& x, double gamma_reg = 0.0) {
  return head.grad_cost_state(kind, x, gamma_reg);
}

enum class TimeWeight { None, SigmaMemSq };

/// Wraps a head cost as a running cost f(x,t) = w(t) * C(x), with w either 1
/// or sigma_mem(t)^2. The cost weight lambda stays outside, at the samplers.
inline RunningCost make_scene_cost(std::shared_ptr<const MapHead> head, CostKind kind,
                                   TimeWeight weight, const InterpolantSchedule& sched,
                                   double gamma_reg = 0.0) {
  auto w = [weight, sched](double t) {
    if (weight == TimeWeight::None) return 1.0;
    const double s = sigma_mem(sched, t);
    return s * s;
  };
  return RunningCost{
      [head, kind, gamma_reg, w](const Vec& x, double t) {
        return w(t) * head->cost_value(kind, x, gamma_reg);
      },
      [head, kind, gamma_reg, w](const Vec& x, double t) {
        return scaled(head->grad_cost_state(kind, x, gamma_reg), w(t));
      }};
}

}  // namespace flowctl

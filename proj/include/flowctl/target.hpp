#pragma once

#include "flowctl/common.hpp"

namespace flowctl {

// Toy endpoint distributions for the desk-scale tasks. Draws are pure
// functions of (key, index), matching the counter-RNG convention.

enum class TargetKind { PointMass, Gaussian, Mixture };

class ToyTarget {
 public:
  static ToyTarget point_mass(Vec mu) { return ToyTarget(TargetKind::PointMass, {std::move(mu)}, 0.0); }

  static ToyTarget gaussian(Vec mu, double sigma) {
    if (sigma < 0.0) throw ConfigError("target sigma must be >= 0");
    return ToyTarget(TargetKind::Gaussian, {std::move(mu)}, sigma);
  }

  static ToyTarget mixture(std::vector<Vec> centers, double sigma) {
    if (centers.empty()) throw ConfigError("mixture needs at least one center");
    if (sigma < 0.0) throw ConfigError("target sigma must be >= 0");
    for (const auto& c : centers) check_same_dim(c, centers.front(), "mixture centers");
    return ToyTarget(TargetKind::Mixture, std::move(centers), sigma);
  }

  TargetKind kind() const { return kind_; }
  int dim() const { return static_cast<int>(centers_.front().size()); }
  double sigma() const { return sigma_; }
  const std::vector<Vec>& centers() const { return centers_; }

  Vec sample(std::uint64_t key, std::uint64_t index) const {
    const std::uint64_t k = mix_key(key, 0x7461726745ULL);
    const std::size_t d = centers_.front().size();
    switch (kind_) {
      case TargetKind::PointMass:
        return centers_.front();
      case TargetKind::Gaussian: {
        Vec x = centers_.front();
        for (std::size_t i = 0; i < d; ++i) x[i] += sigma_ * normal01(k, index * (d + 1) + i);
        return x;
      }
      case TargetKind::Mixture: {
        const std::uint64_t stride = index * (d + 1);
        const double u = uniform01(k, stride + d);
        const std::size_t c = std::min(centers_.size() - 1,
                                       static_cast<std::size_t>(u * static_cast<double>(centers_.size())));
        Vec x = centers_[c];
        for (std::size_t i = 0; i < d; ++i) x[i] += sigma_ * normal01(k, stride + i);
        return x;
      }
    }
    return centers_.front();
  }

 private:
  ToyTarget(TargetKind kind, std::vector<Vec> centers, double sigma)
      : kind_(kind), centers_(std::move(centers)), sigma_(sigma) {}

  TargetKind kind_;
  std::vector<Vec> centers_;
  double sigma_;
};

inline Vec sample_base(std::uint64_t key, std::uint64_t index, int dim) {
  return normal_vec(mix_key(key, 0x62617365ULL), index * static_cast<std::uint64_t>(dim),
                    static_cast<std::size_t>(dim));
}

}  // namespace flowctl

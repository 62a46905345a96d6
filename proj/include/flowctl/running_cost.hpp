#pragma once

#include <functional>

#include "flowctl/common.hpp"

namespace flowctl {

// Differentiable running cost f(x, t) handed to the controlled samplers and
// the adjoint pass. Any time weighting (e.g. the sigma_mem^2 reweighting used
// by the deterministic controller) is baked into the callbacks; the scalar
// cost weight stays an explicit lambda argument at every call site.
struct RunningCost {
  std::function<double(const Vec&, double)> value;
  std::function<Vec(const Vec&, double)> grad;

  static RunningCost zero() {
    return {[](const Vec&, double) { return 0.0; },
            [](const Vec& x, double) { return Vec(x.size(), 0.0); }};
  }
};

}  // namespace flowctl

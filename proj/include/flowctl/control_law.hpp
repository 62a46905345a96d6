#pragma once

#include "flowctl/common.hpp"

namespace flowctl {

/// Single-pass instantaneous control: u*_t = -sigma_t (1-t) grad_f.
/// Pass sigma_t = 1 for the deterministic (ODE) variant, where the control
/// enters the velocity directly.
inline Vec instantaneous_control(double sigma_t, double t, const Vec& grad_f) {
  return scaled(grad_f, -sigma_t * (1.0 - t));
}

}  // namespace flowctl

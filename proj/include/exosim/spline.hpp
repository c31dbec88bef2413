#pragma once

#include "exosim/common.hpp"

namespace exosim {

/// Interpolating cubic spline over a set of columns sharing one knot vector.
/// Natural end conditions, or periodic ones (first and last rows must match).
class CubicSpline {
 public:
  CubicSpline() = default;
  CubicSpline(VecX knots, MatX values, bool periodic);

  struct Eval {
    VecX value, d1, d2;
  };
  Eval evaluate(double t) const;  // t clamped to the knot range

  const VecX& knots() const { return t_; }
  const MatX& values() const { return y_; }
  bool periodic() const { return periodic_; }

 private:
  VecX t_;
  MatX y_;
  MatX m_;  // second derivatives at the knots
  bool periodic_ = false;
};

}  // namespace exosim

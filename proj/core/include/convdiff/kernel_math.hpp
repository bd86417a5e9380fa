#pragma once

// Closed-form scalar functions for the uniform-window convolution kernel.
//
// All smoothing arguments are window lengths measured in units of the
// sampling step h_n and must lie in [0, rho_bar]. The library fixes
// rho_bar > 2; the case split of the ratio function below assumes it.

#include <cstddef>

namespace convdiff {

/// Upper bound rho_bar of the smoothing parameter space [0, rho_bar]^d.
class SmoothingBound {
 public:
  static constexpr double kDefault = 100.0;

  SmoothingBound() : SmoothingBound(kDefault) {}
  /// Throws DomainError unless rho_bar > 2 and finite.
  explicit SmoothingBound(double rho_bar);

  double rho_bar() const noexcept { return rho_bar_; }

  /// Smallest value taken by ratio_R on [0, rho_bar]: (3 rho_bar - 1) / (6 rho_bar - 4).
  double ratio_floor() const noexcept;

  bool contains(double rho) const noexcept { return rho >= 0.0 && rho <= rho_bar_; }

 private:
  double rho_bar_;
};

/// A piecewise function value tagged with the case that produced it.
struct PiecewiseValue {
  double value;
  int branch;
};

/// Entrywise shrink factor of the limiting quadratic covariation of the
/// observed increments. Symmetric in its arguments. Branches are numbered
/// 1..15 in the order of the defining table (see kernel_math.cpp).
PiecewiseValue f_G(double rho_i, double rho_j, const SmoothingBound& bound);

/// Lag-0 cross-covariance factor between a convolved level on axis i and the
/// next increment on axis j. Not symmetric. Branches 1..8.
PiecewiseValue f_D0(double rho_i, double rho_j, const SmoothingBound& bound);

/// Limit factor of the full quadratic variation; equals f_G(rho, rho).
double full_qv_limit(double rho, const SmoothingBound& bound);

/// Limit factor of the reduced (step-2) quadratic variation.
double reduced_qv_limit(double rho, const SmoothingBound& bound);

/// Ratio of the full to the reduced QV limit. Strictly decreasing from
/// R(0) = 1 to R(rho_bar) = bound.ratio_floor().
double ratio_R(double rho, const SmoothingBound& bound);

/// Inverse of ratio_R on [bound.ratio_floor(), 1].
double ratio_R_inverse(double x, const SmoothingBound& bound);

/// Standard normal distribution function.
double gaussian_cdf(double z);

/// Standard normal quantile, by bisection on gaussian_cdf to 1e-12.
double gaussian_quantile(double p);

}  // namespace convdiff

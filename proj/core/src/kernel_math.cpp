#include "convdiff/kernel_math.hpp"

#include <cmath>
#include <string>

#include "convdiff/errors.hpp"

namespace convdiff {

namespace {

void require_in_range(double rho, const SmoothingBound& bound, const char* what) {
  if (!(rho >= 0.0 && rho <= bound.rho_bar())) {
    throw DomainError(std::string(what) + ": smoothing argument " + std::to_string(rho) +
                      " outside [0, " + std::to_string(bound.rho_bar()) + "]");
  }
}

// f_G evaluated with hi >= lo. Every value of f_G is produced here so the
// function is exactly symmetric in floating point.
double f_G_ordered(double hi, double lo) {
  if (hi == 0.0) return 1.0;
  if (lo == 0.0) return hi <= 1.0 ? 1.0 - hi / 2.0 : 1.0 / (2.0 * hi);
  const double denom = 6.0 * hi * lo;
  if (hi <= 1.0) {
    return (-3.0 * hi * hi * lo + 3.0 * hi * lo * lo + 6.0 * hi * lo - 2.0 * lo * lo * lo) / denom;
  }
  const double gap = hi - lo;
  if (lo <= 1.0) {
    if (hi > lo + 1.0) return (3.0 * lo * lo + 3.0 * lo - lo * lo * lo) / denom;
    return (gap * gap * gap - 3.0 * hi * hi + 6.0 * hi * lo + 3.0 * hi - 1.0 - lo * lo * lo) / denom;
  }
  if (hi > lo + 1.0) return (6.0 * lo - 1.0) / denom;
  return (gap * gap * gap - 3.0 * hi * hi + 6.0 * hi * lo + 3.0 * hi - 3.0 * lo * lo + 3.0 * lo -
          2.0) /
         denom;
}

// Case number of the f_G table for the literal (rho_i, rho_j) order.
int f_G_branch(double ri, double rj) {
  if (ri == 0.0 && rj == 0.0) return 1;
  if (ri == 0.0) return rj <= 1.0 ? 2 : 3;
  if (rj == 0.0) return ri <= 1.0 ? 4 : 5;
  if (ri <= 1.0 && rj <= 1.0) return ri > rj ? 6 : 7;
  if (ri > 1.0 && rj <= 1.0) return ri > rj + 1.0 ? 8 : 10;
  if (ri <= 1.0) return rj <= ri + 1.0 ? 12 : 14;
  if (ri > rj + 1.0) return 9;
  if (rj < ri) return 11;
  if (rj <= ri + 1.0) return 13;
  return 15;
}

}  // namespace

SmoothingBound::SmoothingBound(double rho_bar) : rho_bar_(rho_bar) {
  if (!std::isfinite(rho_bar) || !(rho_bar > 2.0)) {
    throw DomainError("rho_bar must be finite and greater than 2, got " + std::to_string(rho_bar));
  }
}

double SmoothingBound::ratio_floor() const noexcept {
  return (3.0 * rho_bar_ - 1.0) / (6.0 * rho_bar_ - 4.0);
}

PiecewiseValue f_G(double rho_i, double rho_j, const SmoothingBound& bound) {
  require_in_range(rho_i, bound, "f_G");
  require_in_range(rho_j, bound, "f_G");
  const double hi = rho_i >= rho_j ? rho_i : rho_j;
  const double lo = rho_i >= rho_j ? rho_j : rho_i;
  return {f_G_ordered(hi, lo), f_G_branch(rho_i, rho_j)};
}

PiecewiseValue f_D0(double rho_i, double rho_j, const SmoothingBound& bound) {
  require_in_range(rho_i, bound, "f_D0");
  require_in_range(rho_j, bound, "f_D0");
  const double ri = rho_i;
  const double rj = rho_j;
  if (rj == 0.0) return {0.0, 1};
  if (ri == 0.0) {
    if (rj <= 1.0) return {rj / 2.0, 2};
    return {(2.0 * rj - 1.0) / (2.0 * rj), 3};
  }
  const double denom = 6.0 * ri * rj;
  if (ri + 1.0 < rj) return {(6.0 * ri * rj - 3.0 * ri * ri - 3.0 * ri) / denom, 4};
  const double diff = ri - rj;
  if (rj > 1.0) {
    if (ri < rj) return {(diff * diff * diff + 3.0 * rj * rj - 3.0 * rj + 1.0) / denom, 5};
    return {(3.0 * rj * rj - 3.0 * rj + 1.0) / denom, 6};
  }
  if (ri < rj) return {(diff * diff * diff + rj * rj * rj) / denom, 7};
  return {rj * rj * rj / denom, 8};
}

double full_qv_limit(double rho, const SmoothingBound& bound) {
  require_in_range(rho, bound, "full_qv_limit");
  if (rho == 0.0) return 1.0;
  if (rho <= 1.0) return 1.0 - rho / 3.0;
  return 1.0 / rho - 1.0 / (3.0 * rho * rho);
}

double reduced_qv_limit(double rho, const SmoothingBound& bound) {
  require_in_range(rho, bound, "reduced_qv_limit");
  if (rho == 0.0) return 1.0;
  if (rho <= 2.0) return 1.0 - rho / 6.0;
  return 2.0 / rho - 4.0 / (3.0 * rho * rho);
}

double ratio_R(double rho, const SmoothingBound& bound) {
  require_in_range(rho, bound, "ratio_R");
  if (rho == 0.0) return 1.0;
  if (rho <= 1.0) return (6.0 - 2.0 * rho) / (6.0 - rho);
  if (rho <= 2.0) return (6.0 * rho - 2.0) / (6.0 * rho * rho - rho * rho * rho);
  return (3.0 * rho - 1.0) / (6.0 * rho - 4.0);
}

double ratio_R_inverse(double x, const SmoothingBound& bound) {
  if (!(x >= bound.ratio_floor() && x <= 1.0)) {
    throw DomainError("ratio_R_inverse: argument " + std::to_string(x) + " outside [" +
                      std::to_string(bound.ratio_floor()) + ", 1]");
  }
  if (x > 0.8) return 6.0 * (1.0 - x) / (2.0 - x);
  if (x <= 0.625) return (4.0 * x - 1.0) / (6.0 * x - 3.0);
  if (x == 0.8) return 1.0;

  // Middle branch: (6y - 2) / (6y^2 - y^3) = x on (1, 2], decreasing in y.
  double lo = 1.0;
  double hi = 2.0;
  while (hi - lo > 1e-13) {
    const double mid = 0.5 * (lo + hi);
    const double r = (6.0 * mid - 2.0) / (6.0 * mid * mid - mid * mid * mid);
    if (r > x) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double gaussian_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double gaussian_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw DomainError("gaussian_quantile: probability " + std::to_string(p) + " outside (0, 1)");
  }
  double lo = -40.0;
  double hi = 40.0;
  while (hi - lo > 1e-12) {
    const double mid = 0.5 * (lo + hi);
    if (gaussian_cdf(mid) < p) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace convdiff

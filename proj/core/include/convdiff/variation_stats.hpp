#pragma once

#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "convdiff/conv_obs.hpp"

namespace convdiff {

/// Neumaier compensated sum.
class CompensatedSum {
 public:
  void add(double v) noexcept {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) {
      comp_ += (sum_ - t) + v;
    } else {
      comp_ += (v - t) + sum_;
    }
    sum_ = t;
  }
  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

struct VariationSummary {
  std::size_t axis = 0;
  double full_qv = 0.0;     // (n h)^-1 sum of squared increments
  double reduced_qv = 0.0;  // (n h)^-1 sum of squared step-2 increments at even indices
  double quartic_sum = 0.0;
  std::size_t n_used = 0;     // increments in the full sum
  std::size_t n_reduced = 0;  // step-2 increments in the reduced sum
  double h_n = 0.0;
  // Unnormalized sums behind full_qv and reduced_qv.
  double sum_sq = 0.0;
  double sum_sq_reduced = 0.0;
};

/// Throws DataError if n < 4.
VariationSummary variations(const ConvolvedSeries& series, std::size_t axis);

/// full_qv / reduced_qv; DataError if reduced_qv is 0.
double ratio_Rn(const VariationSummary& summary);

/// RV(k) = sum_{1 <= i <= n/k} (Y_{ik} - Y_{(i-1)k})^2 for k = 1..k_max.
std::vector<std::pair<std::size_t, double>> rv_curve(const ConvolvedSeries& series,
                                                     std::size_t axis, std::size_t k_max);

}  // namespace convdiff

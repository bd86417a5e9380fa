#include "convdiff/variation_stats.hpp"

#include <cmath>
#include <string>

#include "convdiff/errors.hpp"

namespace convdiff {

namespace {

void check_axis(const ConvolvedSeries& series, std::size_t axis) {
  if (axis >= series.dim) {
    throw RangeError("axis " + std::to_string(axis) + " out of range for a " +
                     std::to_string(series.dim) + "-dimensional series");
  }
}

}  // namespace

VariationSummary variations(const ConvolvedSeries& series, std::size_t axis) {
  check_axis(series, axis);
  const std::size_t n = series.n();
  if (n < 4) {
    throw DataError("variations need at least 4 increments, got " + std::to_string(n));
  }
  CompensatedSum sq, sq2, quart;
  for (std::size_t k = 1; k <= n; ++k) {
    const double d = series.at(k, axis) - series.at(k - 1, axis);
    const double d2 = d * d;
    sq.add(d2);
    quart.add(d2 * d2);
    if (k % 2 == 0) {
      const double e = series.at(k, axis) - series.at(k - 2, axis);
      sq2.add(e * e);
    }
  }
  VariationSummary s;
  s.axis = axis;
  s.n_used = n;
  s.n_reduced = n / 2;
  s.h_n = series.h_n;
  s.sum_sq = sq.value();
  s.sum_sq_reduced = sq2.value();
  s.quartic_sum = quart.value();
  const double nh = static_cast<double>(n) * series.h_n;
  s.full_qv = s.sum_sq / nh;
  s.reduced_qv = s.sum_sq_reduced / nh;
  return s;
}

double ratio_Rn(const VariationSummary& summary) {
  if (!(summary.reduced_qv > 0.0)) {
    throw DataError("reduced quadratic variation of axis " + std::to_string(summary.axis + 1) +
                    " is zero; R_n undefined");
  }
  return summary.full_qv / summary.reduced_qv;
}

std::vector<std::pair<std::size_t, double>> rv_curve(const ConvolvedSeries& series,
                                                     std::size_t axis, std::size_t k_max) {
  check_axis(series, axis);
  const std::size_t n = series.n();
  if (k_max == 0 || k_max > n) {
    throw RangeError("k_max must lie in [1, n = " + std::to_string(n) + "]");
  }
  std::vector<std::pair<std::size_t, double>> out;
  out.reserve(k_max);
  for (std::size_t k = 1; k <= k_max; ++k) {
    CompensatedSum rv;
    for (std::size_t i = 1; i <= n / k; ++i) {
      const double d = series.at(i * k, axis) - series.at((i - 1) * k, axis);
      rv.add(d * d);
    }
    out.emplace_back(k, rv.value());
  }
  return out;
}

}  // namespace convdiff

#include <gtest/gtest.h>

#include <cmath>

#include "convdiff/errors.hpp"
#include "convdiff/kernel_math.hpp"
#include "convdiff/variation_stats.hpp"

using namespace convdiff;

namespace {

ConvolvedSeries series_of(std::vector<double> v, double h) {
  ConvolvedSeries s;
  s.h_n = h;
  s.dim = 1;
  s.rho = {0.0};
  s.window = {0};
  s.values = std::move(v);
  return s;
}

const double kHn = std::pow(10.0, -10.0 / 3.0);

ConvolvedSeries ou_series(double rho, int m, std::uint64_t seed, std::size_t n = 100'000) {
  const ModelSpec model = ou_1d();
  const std::vector<double> alpha{3.0}, beta{-2.0, 1.0};
  SimConfig cfg;
  cfg.h_fine = kHn / std::pow(10.0, m);
  cfg.n_fine = n * static_cast<std::size_t>(std::llround(std::pow(10.0, m)));
  cfg.burn_in = std::max(10.0, std::ceil(rho) + 1.0) * kHn;
  cfg.seed = seed;
  cfg.x_init = {0.0};
  const std::vector<double> r{rho};
  return simulate_convolved(model, alpha, beta, cfg, r, kHn, n);
}

}  // namespace

TEST(Variations, ConstantSeries) {
  const auto s = variations(series_of(std::vector<double>(9, 4.0), 0.5), 0);
  EXPECT_EQ(s.full_qv, 0.0);
  EXPECT_EQ(s.reduced_qv, 0.0);
  EXPECT_EQ(s.quartic_sum, 0.0);
}

TEST(Variations, AlternatingSeries) {
  const auto s = variations(series_of({0, 1, 0, 1, 0}, 1.0), 0);
  EXPECT_DOUBLE_EQ(s.full_qv, 1.0);
  EXPECT_DOUBLE_EQ(s.reduced_qv, 0.0);
  EXPECT_DOUBLE_EQ(s.quartic_sum, 4.0);
  EXPECT_EQ(s.n_used, 4u);
  EXPECT_EQ(s.n_reduced, 2u);
}

TEST(Variations, OddLengthDropsUnpairedIncrement) {
  const auto s = variations(series_of({0, 1, 3, 6, 10, 15}, 1.0), 0);
  EXPECT_EQ(s.n_reduced, 2u);
  EXPECT_DOUBLE_EQ(s.sum_sq_reduced, 9.0 + 49.0);
  EXPECT_DOUBLE_EQ(s.reduced_qv, 58.0 / 5.0);
}

TEST(Variations, TooShortIsDataError) {
  EXPECT_THROW(variations(series_of({0, 1, 2, 3}, 1.0), 0), DataError);
  EXPECT_THROW(variations(series_of({0, 1, 2, 3, 4}, 1.0), 1), RangeError);
}

TEST(RatioRn, Basics) {
  VariationSummary s;
  s.full_qv = 1.0;
  s.reduced_qv = 1.0;
  EXPECT_EQ(ratio_Rn(s), 1.0);
  s.reduced_qv = 0.0;
  EXPECT_THROW(ratio_Rn(s), DataError);
}

TEST(RvCurve, ConstantAndLinear) {
  for (const auto& [k, rv] : rv_curve(series_of(std::vector<double>(20, 1.0), 1.0), 0, 19)) {
    EXPECT_EQ(rv, 0.0) << k;
  }
  const double c = 0.7;
  std::vector<double> v;
  for (int i = 0; i <= 37; ++i) v.push_back(c * i);
  const auto s = series_of(v, 0.1);
  for (const auto& [k, rv] : rv_curve(s, 0, 37)) {
    const double expected = static_cast<double>(37 / k) * c * c * static_cast<double>(k * k);
    EXPECT_NEAR(rv, expected, 1e-11 * expected) << k;
  }
  EXPECT_THROW(rv_curve(s, 0, 38), RangeError);
}

TEST(RvCurve, FirstPointIsScaledFullQv) {
  const auto s = ou_series(0.7, 1, 3, 5000);
  const auto v = variations(s, 0);
  const double rv1 = rv_curve(s, 0, 1)[0].second;
  EXPECT_NEAR(rv1, static_cast<double>(s.n()) * s.h_n * v.full_qv, 1e-13 * rv1);
}

TEST(Variations, DirectOuQvIsAlphaSquared) {
  const auto s = variations(ou_series(0.0, 0, 17), 0);
  EXPECT_NEAR(s.full_qv, 9.0, 0.02 * 9.0);
  EXPECT_NEAR(s.reduced_qv, s.full_qv, 0.03 * 9.0);
  EXPECT_NEAR(ratio_Rn(s), 1.0, 0.03);
}

TEST(Variations, RatioUnderIntegratedScheme) {
  EXPECT_NEAR(ratio_Rn(variations(ou_series(1.0, 2, 23), 0)), 0.8, 0.03 * 0.8);
}

TEST(Variations, LimitsOverSeeds) {
  const SmoothingBound bound;
  for (double rho : {0.5, 1.0, 1.5, 3.0}) {
    double full = 0.0, reduced = 0.0;
    const int seeds = 20;
    for (int s = 0; s < seeds; ++s) {
      const auto v = variations(ou_series(rho, 2, 1000 + s), 0);
      full += v.full_qv / 9.0;
      reduced += v.reduced_qv / 9.0;
    }
    full /= seeds;
    reduced /= seeds;
    EXPECT_NEAR(full, f_G(rho, rho, bound).value, 0.03 * f_G(rho, rho, bound).value) << rho;
    EXPECT_NEAR(reduced, reduced_qv_limit(rho, bound), 0.03 * reduced_qv_limit(rho, bound))
        << rho;
  }
}

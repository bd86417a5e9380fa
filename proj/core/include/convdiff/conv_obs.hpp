#pragma once

// Convolutional observation of a fine-grid path: per axis, a uniform
// left window of length rho * h_n ending at each sampling instant.

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "convdiff/sde_sim.hpp"

namespace convdiff {

struct ConvolvedSeries {
  double h_n = 0.0;
  std::vector<double> rho;          // NaN when unknown (real data)
  std::vector<std::size_t> window;  // fine samples averaged per axis, 0 = direct
  std::size_t dim = 1;
  std::vector<double> values;  // row major, (n + 1) x dim

  std::size_t rows() const noexcept { return dim == 0 ? 0 : values.size() / dim; }
  /// Number of increments n.
  std::size_t n() const noexcept { return rows() == 0 ? 0 : rows() - 1; }
  double at(std::size_t i, std::size_t axis) const { return values[i * dim + axis]; }
  std::span<const double> row(std::size_t i) const {
    return {values.data() + i * dim, dim};
  }
  std::vector<double> axis_values(std::size_t axis) const;
};

/// Ratio h_n / h as an integer; ConfigError if h_n is not a multiple of h.
std::size_t grid_stride(double h_n, double h);

/// Fine samples averaged for smoothing rho; 0 means direct observation.
std::size_t window_length(double rho, double h_n, double h);

/// Convolve with n_obs + 1 observations at times 0, h_n, ..., n_obs h_n.
/// n_obs = 0 takes as many as the path allows.
ConvolvedSeries convolve(const SamplePath& path, std::span<const double> rho, double h_n,
                         std::size_t n_obs = 0);

/// Simulate and convolve in one pass without storing the fine path.
/// Produces exactly convolve(euler_maruyama(...), rho, h_n, n_obs).
ConvolvedSeries simulate_convolved(const ModelSpec& model, std::span<const double> alpha,
                                   std::span<const double> beta, const SimConfig& cfg,
                                   std::span<const double> rho, double h_n, std::size_t n_obs);

/// Every k-th observation.
ConvolvedSeries subsample(const ConvolvedSeries& series, std::size_t k);

/// Header t,x1,...,xd.
void write_series_csv(const ConvolvedSeries& series, std::ostream& out);
/// Inverse of write_series_csv; h_n is taken from the t column and rho is unknown.
ConvolvedSeries read_series_csv(std::istream& in);

/// Receives warnings such as a window too short to resolve at the fine grid.
/// Defaults to stderr; pass an empty function to silence.
void set_warning_sink(std::function<void(const std::string&)> sink);
void warn(const std::string& message);

}  // namespace convdiff

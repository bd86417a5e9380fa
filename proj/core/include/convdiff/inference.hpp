#pragma once

// Smoothing-parameter estimation, the test of H0: rho = 0, least-square
// estimation of alpha and beta, the LGA baseline and the box optimizer.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "convdiff/conv_obs.hpp"
#include "convdiff/kernel_math.hpp"
#include "convdiff/sde_sim.hpp"
#include "convdiff/variation_stats.hpp"

namespace convdiff {

struct RhoEstimate {
  std::vector<double> rho_hat;
  std::vector<double> Rn;
  std::vector<bool> clamped_low;
  std::vector<bool> clamped_high;
};

/// The three-case rule mapping one ratio R_n to rho_hat.
double rho_from_ratio(double Rn, const SmoothingBound& bound, bool* clamped_low = nullptr,
                      bool* clamped_high = nullptr);

RhoEstimate estimate_rho(const ConvolvedSeries& series, const SmoothingBound& bound);

inline const std::vector<double> kDefaultSigLevels{0.10, 0.05, 0.025, 0.01, 0.001};

struct TestReport {
  std::vector<double> t_stat;
  std::vector<double> p_value;  // Phi(t_stat), left tail
  std::vector<std::pair<double, std::vector<bool>>> reject_at;

  /// Rejection of axis at a level present in reject_at.
  bool rejects(double level, std::size_t axis) const;
};

/// sqrt(3/2 / sum dX^4) * (sum dX^2 - sum of even step-2 dX^2).
double smoothing_statistic(const VariationSummary& summary);

TestReport smoothing_test(const ConvolvedSeries& series,
                          std::span<const double> sig_levels = kDefaultSigLevels);

struct OptimizeOptions {
  std::size_t starts = 8;
  double tol = 1e-8;
  std::size_t max_evals = 20000;  // per start
};

struct OptimizeResult {
  std::vector<double> argmax;
  double value = 0.0;
  std::size_t iters = 0;  // objective evaluations
  bool converged = false;
  std::vector<bool> at_boundary;
};

using Objective = std::function<double(std::span<const double>)>;

/// Box-constrained Nelder-Mead ascent with Halton multistart. Non-finite
/// objective values count as rejected candidates.
OptimizeResult bounded_optimize(const Objective& objective, const ParamBox& box,
                                const OptimizeOptions& opts = {});

/// H1(alpha | rho), evaluated term by term.
double h1_objective(const ConvolvedSeries& series, std::span<const double> rho,
                    const ModelSpec& model, std::span<const double> alpha,
                    const SmoothingBound& bound);

/// Lag floor(max rho) + 2 of H2.
std::size_t h2_lag(std::span<const double> rho);

/// H2(beta | rho), evaluated term by term.
double h2_objective(const ConvolvedSeries& series, std::span<const double> rho,
                    const ModelSpec& model, std::span<const double> beta);

/// Euler local Gaussian contrast, treating the series as direct observations.
double lga_objective(const ConvolvedSeries& series, const ModelSpec& model,
                     std::span<const double> alpha, std::span<const double> beta);

struct Estimate {
  std::vector<double> theta;
  double objective = 0.0;
  OptimizeResult opt;
};

struct FitOptions {
  OptimizeOptions optimizer;
  // Use sufficient statistics when the model declares affine drift and
  // constant diffusion. Off forces the term-by-term objectives.
  bool use_structure = true;
};

Estimate lse_alpha(const ConvolvedSeries& series, std::span<const double> rho,
                   const ModelSpec& model, const SmoothingBound& bound,
                   const FitOptions& opts = {});

Estimate lse_beta(const ConvolvedSeries& series, std::span<const double> rho,
                  const ModelSpec& model, const FitOptions& opts = {});

struct FitResult {
  std::vector<double> alpha_hat;
  std::vector<double> beta_hat;
  double objective_alpha = 0.0;
  double objective_beta = 0.0;
  std::size_t optimizer_iters = 0;
  std::vector<bool> at_boundary;  // alpha coordinates, then beta
};

/// lse_alpha and lse_beta at the same rho.
FitResult lse_fit(const ConvolvedSeries& series, std::span<const double> rho,
                  const ModelSpec& model, const SmoothingBound& bound,
                  const FitOptions& opts = {});

/// Joint maximization of the LGA contrast over theta1 x theta2.
/// objective_alpha and objective_beta both hold the contrast value.
FitResult lga_estimate(const ConvolvedSeries& series, const ModelSpec& model,
                       const FitOptions& opts = {});

/// Maximizer of H1 without the optimizer, for constant diffusion given by a
/// symmetric root: A = mean(Q) / F entrywise, alpha from the symmetric square
/// root of A, clipped to theta1.
std::vector<double> lse_alpha_closed_form(const ConvolvedSeries& series,
                                          std::span<const double> rho, const ModelSpec& model,
                                          const SmoothingBound& bound);

/// Unconstrained least-squares solution of H2 for an affine drift.
std::vector<double> lse_beta_ols(const ConvolvedSeries& series, std::span<const double> rho,
                                 const ModelSpec& model);

}  // namespace convdiff

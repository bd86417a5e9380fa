#include "convdiff/inference.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "convdiff/errors.hpp"

namespace convdiff {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

void check_rho(std::span<const double> rho, const ConvolvedSeries& series) {
  if (rho.size() != series.dim) {
    throw ConfigError("rho has " + std::to_string(rho.size()) + " entries, series has " +
                      std::to_string(series.dim) + " axes");
  }
  for (double r : rho) {
    if (!(r >= 0.0) || !std::isfinite(r)) throw DomainError("rho must be finite and >= 0");
  }
}

void check_model(const ConvolvedSeries& series, const ModelSpec& model) {
  model.validate();
  if (model.dim_d != series.dim) {
    throw ConfigError(model.name + " is " + std::to_string(model.dim_d) +
                      "-dimensional but the series has " + std::to_string(series.dim) + " axes");
  }
}

std::vector<double> increment(const ConvolvedSeries& s, std::size_t k) {
  std::vector<double> d(s.dim);
  for (std::size_t l = 0; l < s.dim; ++l) d[l] = s.at(k, l) - s.at(k - 1, l);
  return d;
}

std::vector<double> f_G_matrix(std::span<const double> rho, const SmoothingBound& bound) {
  const std::size_t d = rho.size();
  std::vector<double> F(d * d);
  for (std::size_t a = 0; a < d; ++a) {
    for (std::size_t b = 0; b < d; ++b) F[a * d + b] = f_G(rho[a], rho[b], bound).value;
  }
  return F;
}

// Sums of Q_k = h^-1 dX dX^T over k = 1..n.
struct QStats {
  double n = 0.0;
  std::vector<double> mean;
  double sum_sq = 0.0;  // sum_k ||Q_k||^2
};

QStats q_stats(const ConvolvedSeries& s) {
  const std::size_t d = s.dim;
  std::vector<CompensatedSum> sums(d * d);
  CompensatedSum sq;
  for (std::size_t k = 1; k <= s.n(); ++k) {
    const auto dx = increment(s, k);
    double norm = 0.0;
    for (std::size_t a = 0; a < d; ++a) {
      for (std::size_t b = 0; b < d; ++b) {
        const double q = dx[a] * dx[b] / s.h_n;
        sums[a * d + b].add(q);
        norm += q * q;
      }
    }
    sq.add(norm);
  }
  QStats st;
  st.n = static_cast<double>(s.n());
  for (auto& c : sums) st.mean.push_back(c.value() / st.n);
  st.sum_sq = sq.value();
  return st;
}

// Sums for the affine-drift form of H2 at lag L:
// H2 = -(h^-1 sdx - 2 beta^T v + h beta^T M beta).
struct DriftStats {
  double sdx = 0.0;
  Vec v;
  Mat M;
};

DriftStats drift_stats(const ConvolvedSeries& s, const ModelSpec& model, std::size_t lag) {
  const std::size_t d = s.dim;
  const std::size_t m = model.beta_dim();
  std::vector<double> phi(d * m);
  CompensatedSum sdx;
  std::vector<CompensatedSum> v(m), M(m * m);
  for (std::size_t k = lag; k <= s.n(); ++k) {
    const auto dx = increment(s, k);
    model.drift_design(s.row(k - lag), phi);
    for (std::size_t a = 0; a < d; ++a) sdx.add(dx[a] * dx[a]);
    for (std::size_t j = 0; j < m; ++j) {
      double vj = 0.0;
      for (std::size_t a = 0; a < d; ++a) vj += phi[a * m + j] * dx[a];
      v[j].add(vj);
      for (std::size_t l = 0; l < m; ++l) {
        double mjl = 0.0;
        for (std::size_t a = 0; a < d; ++a) mjl += phi[a * m + j] * phi[a * m + l];
        M[j * m + l].add(mjl);
      }
    }
  }
  DriftStats st;
  st.sdx = sdx.value();
  st.v.resize(static_cast<Eigen::Index>(m));
  st.M.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
  for (std::size_t j = 0; j < m; ++j) {
    st.v(static_cast<Eigen::Index>(j)) = v[j].value();
    for (std::size_t l = 0; l < m; ++l) {
      st.M(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(l)) = M[j * m + l].value();
    }
  }
  return st;
}

// Sums for the LGA contrast with affine drift, lag 1.
struct LgaStats {
  double n = 0.0;
  std::vector<double> D;  // sum dx_a dx_b
  std::vector<double> P;  // [a][j][b]: sum Phi_aj dx_b
  std::vector<double> W;  // [a][j][b][l]: sum Phi_aj Phi_bl
};

LgaStats lga_stats(const ConvolvedSeries& s, const ModelSpec& model) {
  const std::size_t d = s.dim;
  const std::size_t m = model.beta_dim();
  std::vector<double> phi(d * m);
  std::vector<CompensatedSum> D(d * d), P(d * m * d), W(d * m * d * m);
  for (std::size_t k = 1; k <= s.n(); ++k) {
    const auto dx = increment(s, k);
    model.drift_design(s.row(k - 1), phi);
    for (std::size_t a = 0; a < d; ++a) {
      for (std::size_t b = 0; b < d; ++b) D[a * d + b].add(dx[a] * dx[b]);
      for (std::size_t j = 0; j < m; ++j) {
        const double p = phi[a * m + j];
        if (p == 0.0) continue;
        for (std::size_t b = 0; b < d; ++b) {
          P[(a * m + j) * d + b].add(p * dx[b]);
          for (std::size_t l = 0; l < m; ++l) {
            W[((a * m + j) * d + b) * m + l].add(p * phi[b * m + l]);
          }
        }
      }
    }
  }
  LgaStats st;
  st.n = static_cast<double>(s.n());
  for (auto& c : D) st.D.push_back(c.value());
  for (auto& c : P) st.P.push_back(c.value());
  for (auto& c : W) st.W.push_back(c.value());
  return st;
}

Mat to_matrix(const std::vector<double>& v, std::size_t d) {
  Mat A(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  for (std::size_t a = 0; a < d; ++a) {
    for (std::size_t b = 0; b < d; ++b) {
      A(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = v[a * d + b];
    }
  }
  return A;
}

// log det A and A^-1 for symmetric positive definite A; false otherwise.
bool spd_inverse(const Mat& A, double& logdet, Mat& inv) {
  Eigen::LLT<Mat> llt(A);
  if (llt.info() != Eigen::Success) return false;
  const auto L = llt.matrixL();
  logdet = 0.0;
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    const double lii = L(i, i);
    // Pivots at roundoff level mean A is singular in all but name.
    if (!(lii * lii > 1e-12 * A(i, i))) return false;
    logdet += 2.0 * std::log(lii);
  }
  inv = llt.solve(Mat::Identity(A.rows(), A.cols()));
  return std::isfinite(logdet) && inv.allFinite();
}

bool structured(const ModelSpec& model, const FitOptions& opts) {
  return opts.use_structure && model.constant_diffusion && static_cast<bool>(model.drift_design);
}

std::vector<double> concat(std::span<const double> a, std::span<const double> b) {
  std::vector<double> out(a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

}  // namespace

double rho_from_ratio(double Rn, const SmoothingBound& bound, bool* clamped_low,
                      bool* clamped_high) {
  if (std::isnan(Rn)) throw DataError("R_n is NaN");
  bool low = false, high = false;
  double rho;
  if (Rn > 1.0) {
    rho = 0.0;
    low = true;
  } else if (Rn < bound.ratio_floor()) {
    rho = bound.rho_bar();
    high = true;
  } else {
    rho = ratio_R_inverse(Rn, bound);
  }
  if (clamped_low) *clamped_low = low;
  if (clamped_high) *clamped_high = high;
  return rho;
}

RhoEstimate estimate_rho(const ConvolvedSeries& series, const SmoothingBound& bound) {
  RhoEstimate est;
  for (std::size_t l = 0; l < series.dim; ++l) {
    const double Rn = ratio_Rn(variations(series, l));
    bool low = false, high = false;
    est.rho_hat.push_back(rho_from_ratio(Rn, bound, &low, &high));
    est.Rn.push_back(Rn);
    est.clamped_low.push_back(low);
    est.clamped_high.push_back(high);
  }
  return est;
}

bool TestReport::rejects(double level, std::size_t axis) const {
  for (const auto& [lv, flags] : reject_at) {
    if (lv == level) return flags.at(axis);
  }
  throw RangeError("significance level not present in the report");
}

double smoothing_statistic(const VariationSummary& s) {
  if (!(s.quartic_sum > 0.0)) {
    throw DataError("quartic sum of axis " + std::to_string(s.axis + 1) +
                    " is zero; the series is constant");
  }
  return std::sqrt(1.5 / s.quartic_sum) * (s.sum_sq - s.sum_sq_reduced);
}

TestReport smoothing_test(const ConvolvedSeries& series, std::span<const double> sig_levels) {
  TestReport rep;
  for (std::size_t l = 0; l < series.dim; ++l) {
    const double t = smoothing_statistic(variations(series, l));
    rep.t_stat.push_back(t);
    const double p = gaussian_cdf(t);
    rep.p_value.push_back(
        std::clamp(p, std::numeric_limits<double>::denorm_min(), std::nextafter(1.0, 0.0)));
  }
  for (double level : sig_levels) {
    const double crit = gaussian_quantile(level);
    std::vector<bool> flags;
    for (double t : rep.t_stat) flags.push_back(t < crit);
    rep.reject_at.emplace_back(level, std::move(flags));
  }
  return rep;
}

double h1_objective(const ConvolvedSeries& series, std::span<const double> rho,
                    const ModelSpec& model, std::span<const double> alpha,
                    const SmoothingBound& bound) {
  check_rho(rho, series);
  check_model(series, model);
  const std::size_t d = series.dim;
  const auto F = f_G_matrix(rho, bound);
  CompensatedSum total;
  std::vector<double> A;
  for (std::size_t k = 1; k <= series.n(); ++k) {
    if (!model.constant_diffusion || k == 1) A = model.eval_covariance(series.row(k - 1), alpha);
    const auto dx = increment(series, k);
    double term = 0.0;
    for (std::size_t a = 0; a < d; ++a) {
      for (std::size_t b = 0; b < d; ++b) {
        const double r = dx[a] * dx[b] / series.h_n - A[a * d + b] * F[a * d + b];
        term += r * r;
      }
    }
    total.add(term);
  }
  return -total.value();
}

std::size_t h2_lag(std::span<const double> rho) {
  double mx = 0.0;
  for (double r : rho) mx = std::max(mx, r);
  return static_cast<std::size_t>(std::floor(mx)) + 2;
}

double h2_objective(const ConvolvedSeries& series, std::span<const double> rho,
                    const ModelSpec& model, std::span<const double> beta) {
  check_rho(rho, series);
  check_model(series, model);
  const std::size_t lag = h2_lag(rho);
  if (series.n() <= lag) throw DataError("series too short for the H2 lag");
  const double h = series.h_n;
  std::vector<double> b(series.dim);
  CompensatedSum total;
  for (std::size_t k = lag; k <= series.n(); ++k) {
    model.drift(series.row(k - lag), beta, b);
    double term = 0.0;
    for (std::size_t a = 0; a < series.dim; ++a) {
      const double r = series.at(k, a) - series.at(k - 1, a) - h * b[a];
      term += r * r;
    }
    total.add(term / h);
  }
  return -total.value();
}

double lga_objective(const ConvolvedSeries& series, const ModelSpec& model,
                     std::span<const double> alpha, std::span<const double> beta) {
  check_model(series, model);
  const std::size_t d = series.dim;
  const double h = series.h_n;
  std::vector<double> b(d);
  Vec r(static_cast<Eigen::Index>(d));
  Mat inv;
  double logdet = 0.0;
  bool have = false;
  CompensatedSum total;
  for (std::size_t k = 1; k <= series.n(); ++k) {
    const auto x = series.row(k - 1);
    if (!model.constant_diffusion || !have) {
      if (!spd_inverse(to_matrix(model.eval_covariance(x, alpha), d), logdet, inv)) return kNaN;
      have = true;
    }
    model.drift(x, beta, b);
    for (std::size_t a = 0; a < d; ++a) {
      r(static_cast<Eigen::Index>(a)) = series.at(k, a) - series.at(k - 1, a) - h * b[a];
    }
    total.add(logdet + r.dot(inv * r) / h);
  }
  return -total.value();
}

Estimate lse_alpha(const ConvolvedSeries& series, std::span<const double> rho,
                   const ModelSpec& model, const SmoothingBound& bound, const FitOptions& opts) {
  check_rho(rho, series);
  check_model(series, model);
  if (series.n() < 1) throw DataError("series has no increments");
  Estimate est;
  if (model.constant_diffusion && opts.use_structure) {
    const std::size_t d = series.dim;
    const QStats st = q_stats(series);
    const auto F = f_G_matrix(rho, bound);
    const auto x0 = series.row(0);
    // H1 = -(n ||mean Q - G||^2 + offset); the search uses the first term only.
    double mean_sq = 0.0;
    for (double q : st.mean) mean_sq += q * q;
    const double offset = st.sum_sq - st.n * mean_sq;
    auto centered = [&](std::span<const double> alpha) {
      const auto A = model.eval_covariance(x0, alpha);
      double s = 0.0;
      for (std::size_t e = 0; e < d * d; ++e) {
        const double r = st.mean[e] - A[e] * F[e];
        s += r * r;
      }
      return -st.n * s;
    };
    est.opt = bounded_optimize(centered, model.theta1, opts.optimizer);
    est.objective = est.opt.value - offset;
  } else {
    auto full = [&](std::span<const double> alpha) {
      return h1_objective(series, rho, model, alpha, bound);
    };
    est.opt = bounded_optimize(full, model.theta1, opts.optimizer);
    est.objective = est.opt.value;
  }
  est.theta = est.opt.argmax;
  return est;
}

Estimate lse_beta(const ConvolvedSeries& series, std::span<const double> rho,
                  const ModelSpec& model, const FitOptions& opts) {
  check_rho(rho, series);
  check_model(series, model);
  const std::size_t lag = h2_lag(rho);
  if (series.n() <= lag) throw DataError("series too short for the H2 lag");
  Estimate est;
  if (model.drift_design && opts.use_structure) {
    const DriftStats st = drift_stats(series, model, lag);
    const double h = series.h_n;
    auto partial = [&](std::span<const double> beta) {
      const Eigen::Map<const Vec> b(beta.data(), static_cast<Eigen::Index>(beta.size()));
      return 2.0 * b.dot(st.v) - h * b.dot(st.M * b);
    };
    est.opt = bounded_optimize(partial, model.theta2, opts.optimizer);
    est.objective = est.opt.value - st.sdx / h;
  } else {
    auto full = [&](std::span<const double> beta) {
      return h2_objective(series, rho, model, beta);
    };
    est.opt = bounded_optimize(full, model.theta2, opts.optimizer);
    est.objective = est.opt.value;
  }
  est.theta = est.opt.argmax;
  return est;
}

FitResult lse_fit(const ConvolvedSeries& series, std::span<const double> rho,
                  const ModelSpec& model, const SmoothingBound& bound, const FitOptions& opts) {
  const Estimate a = lse_alpha(series, rho, model, bound, opts);
  const Estimate b = lse_beta(series, rho, model, opts);
  FitResult fit;
  fit.alpha_hat = a.theta;
  fit.beta_hat = b.theta;
  fit.objective_alpha = a.objective;
  fit.objective_beta = b.objective;
  fit.optimizer_iters = a.opt.iters + b.opt.iters;
  fit.at_boundary = a.opt.at_boundary;
  fit.at_boundary.insert(fit.at_boundary.end(), b.opt.at_boundary.begin(),
                         b.opt.at_boundary.end());
  return fit;
}

FitResult lga_estimate(const ConvolvedSeries& series, const ModelSpec& model,
                       const FitOptions& opts) {
  check_model(series, model);
  if (series.n() < 2) throw DataError("LGA needs at least two increments");
  const std::size_t m1 = model.alpha_dim();
  const std::size_t m2 = model.beta_dim();
  const ParamBox box(concat(model.theta1.low, model.theta2.low),
                     concat(model.theta1.high, model.theta2.high));

  OptimizeResult opt;
  if (structured(model, opts)) {
    const std::size_t d = series.dim;
    const LgaStats st = lga_stats(series, model);
    const double h = series.h_n;
    const auto x0 = series.row(0);
    auto contrast = [&](std::span<const double> theta) {
      const auto alpha = theta.subspan(0, m1);
      const auto beta = theta.subspan(m1, m2);
      Mat inv;
      double logdet = 0.0;
      if (!spd_inverse(to_matrix(model.eval_covariance(x0, alpha), d), logdet, inv)) return kNaN;
      // tr(A^-1 S(beta)) with S expanded through the stored sums.
      double tr = 0.0;
      for (std::size_t a = 0; a < d; ++a) {
        for (std::size_t b = 0; b < d; ++b) {
          double S = st.D[a * d + b];
          for (std::size_t j = 0; j < m2; ++j) {
            S -= h * beta[j] * (st.P[(a * m2 + j) * d + b] + st.P[(b * m2 + j) * d + a]);
            for (std::size_t l = 0; l < m2; ++l) {
              S += h * h * beta[j] * beta[l] * st.W[((a * m2 + j) * d + b) * m2 + l];
            }
          }
          tr += inv(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a)) * S;
        }
      }
      return -(st.n * logdet + tr / h);
    };
    opt = bounded_optimize(contrast, box, opts.optimizer);
  } else {
    auto contrast = [&](std::span<const double> theta) {
      return lga_objective(series, model, theta.subspan(0, m1), theta.subspan(m1, m2));
    };
    opt = bounded_optimize(contrast, box, opts.optimizer);
  }
  FitResult fit;
  fit.alpha_hat.assign(opt.argmax.begin(), opt.argmax.begin() + static_cast<long>(m1));
  fit.beta_hat.assign(opt.argmax.begin() + static_cast<long>(m1), opt.argmax.end());
  fit.objective_alpha = opt.value;
  fit.objective_beta = opt.value;
  fit.optimizer_iters = opt.iters;
  fit.at_boundary = opt.at_boundary;
  return fit;
}

std::vector<double> lse_alpha_closed_form(const ConvolvedSeries& series,
                                          std::span<const double> rho, const ModelSpec& model,
                                          const SmoothingBound& bound) {
  check_rho(rho, series);
  check_model(series, model);
  if (!model.constant_diffusion || !model.symmetric_root_diffusion) {
    throw ConfigError(model.name + ": closed-form alpha needs a constant symmetric-root diffusion");
  }
  const std::size_t d = series.dim;
  const QStats st = q_stats(series);
  const auto F = f_G_matrix(rho, bound);
  std::vector<double> target(d * d);
  for (std::size_t e = 0; e < d * d; ++e) target[e] = st.mean[e] / F[e];
  Eigen::SelfAdjointEigenSolver<Mat> eig(to_matrix(target, d));
  Vec ev = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  const Mat root = eig.eigenvectors() * ev.asDiagonal() * eig.eigenvectors().transpose();
  std::vector<double> alpha;
  for (Eigen::Index a = 0; a < root.rows(); ++a) {
    for (Eigen::Index b = a; b < root.cols(); ++b) alpha.push_back(root(a, b));
  }
  return model.theta1.clip(alpha);
}

std::vector<double> lse_beta_ols(const ConvolvedSeries& series, std::span<const double> rho,
                                 const ModelSpec& model) {
  check_rho(rho, series);
  check_model(series, model);
  if (!model.drift_design) throw ConfigError(model.name + ": OLS needs an affine drift design");
  const std::size_t lag = h2_lag(rho);
  if (series.n() <= lag) throw DataError("series too short for the H2 lag");
  const DriftStats st = drift_stats(series, model, lag);
  const Vec beta = (series.h_n * st.M).colPivHouseholderQr().solve(st.v);
  return {beta.data(), beta.data() + beta.size()};
}

}  // namespace convdiff

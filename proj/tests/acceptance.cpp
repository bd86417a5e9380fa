// Acceptance suite. Prints one PASS/FAIL line per criterion (plus INFO lines
// that are reported but never gate) and exits nonzero if any criterion fails.
//
//   acceptance [criterion ids...] [--threads N] [--skip-info]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "convdiff/conv_obs.hpp"
#include "convdiff/format.hpp"
#include "convdiff/harness.hpp"
#include "convdiff/inference.hpp"
#include "convdiff/kernel_math.hpp"
#include "convdiff/variation_stats.hpp"
#include "support/kernel_grid.hpp"

using namespace convdiff;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::size_t g_threads = 0;
bool g_info = true;
int g_failures = 0;

std::string num(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

void report(const std::string& tag, const std::string& title, const std::function<Outcome()>& f,
            bool gating = true) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = f();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const char* verdict = gating ? (o.pass ? "PASS" : "FAIL") : "INFO";
  if (gating && !o.pass) ++g_failures;
  std::printf("%s %-4s %s: %s [%.1fs]\n", verdict, tag.c_str(), title.c_str(), o.detail.c_str(),
              secs);
  std::fflush(stdout);
}

ExperimentConfig sim1d(double rho, std::size_t reps, bool lga) {
  auto c = ExperimentConfig::defaults(Study::sim1d);
  c.rho_true = {rho};
  c.replications = reps;
  c.fit_lga = lga;
  c.threads = g_threads;
  return c;
}

// C1
Outcome kernel_oracle() {
  const SmoothingBound bound;
  const auto t0 = std::chrono::steady_clock::now();
  const auto sweep = testing::sweep_oracle_grid(bound, 100000);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool ok = sweep.max_error_G <= 1e-4 && sweep.max_error_D0 <= 1e-4 &&
                  sweep.branches_G.size() == 15 && sweep.branches_D0.size() == 8 && secs < 60.0;
  return {ok, "max err f_G " + num(sweep.max_error_G) + ", f_D0 " + num(sweep.max_error_D0) +
                  ", branches " + std::to_string(sweep.branches_G.size()) + "/15 and " +
                  std::to_string(sweep.branches_D0.size()) + "/8"};
}

// C2
Outcome continuity() {
  const SmoothingBound bound;
  const double eps = 1e-6;
  const auto pts = testing::boundary_points();
  const double jg = testing::max_boundary_jump(
      [&](double a, double b) { return f_G(a, b, bound).value; }, pts, eps, bound.rho_bar());
  const double jd = testing::max_boundary_jump(
      [&](double a, double b) { return f_D0(a, b, bound).value; }, pts, eps, bound.rho_bar());
  double jr = 0.0;
  for (double knot : {0.0, 1.0, 2.0}) {
    for (double side : {-eps, eps}) {
      const double x = knot + side;
      if (x < 0) continue;
      jr = std::max({jr, std::abs(ratio_R(x, bound) - ratio_R(knot, bound)),
                     std::abs(full_qv_limit(x, bound) - full_qv_limit(knot, bound)),
                     std::abs(reduced_qv_limit(x, bound) - reduced_qv_limit(knot, bound))});
    }
  }
  const double worst = std::max({jg, jd, jr});
  return {worst <= 1e-5, std::to_string(pts.size()) + " boundary points, max jump " + num(worst)};
}

// C3
Outcome ratio_function() {
  const SmoothingBound bound;
  const std::size_t n = 10000;
  bool monotone = true;
  double round_trip = 0.0;
  double prev = ratio_R(0.0, bound);
  for (std::size_t i = 0; i <= n; ++i) {
    const double rho = bound.rho_bar() * static_cast<double>(i) / n;
    const double r = ratio_R(rho, bound);
    if (i > 0 && !(r < prev)) monotone = false;
    prev = r;
    round_trip = std::max(round_trip, std::abs(ratio_R_inverse(r, bound) - rho));
  }
  const double e1 = std::abs(ratio_R(1.0, bound) - 0.8);
  const double e2 = std::abs(ratio_R(2.0, bound) - 0.625);
  const bool ok = monotone && round_trip <= 1e-9 && e1 <= 1e-12 && e2 <= 1e-12;
  return {ok, std::string(monotone ? "strictly decreasing" : "NOT monotone") +
                  ", round trip " + num(round_trip) + ", |R(1)-4/5| " + num(e1) +
                  ", |R(2)-5/8| " + num(e2)};
}

// C4
Outcome table1(int m) {
  const double rhos[] = {0.1, 0.5, 1.0};
  const double target_mean[] = {0.0971, 0.498, 0.999};
  const double target_rmse[] = {0.0256, 0.0180, 0.0110};
  bool ok = true;
  std::string detail = "m=" + std::to_string(m) + ";";
  for (int i = 0; i < 3; ++i) {
    auto c = sim1d(rhos[i], 100, false);
    c.m_precision = m;
    const auto row = run_sim_study(c).summary.row("rho_hat_1");
    const double tol = std::max(0.01, 3.0 * target_rmse[i] / 10.0);
    const bool hit = std::abs(row.mean - target_mean[i]) <= tol;
    ok = ok && hit;
    detail += " rho=" + num(rhos[i]) + " mean " + num(row.mean) + " (target " +
              num(target_mean[i]) + "+-" + num(tol, 3) + (hit ? ")" : ", MISS)");
  }
  return {ok, detail};
}

// C5
Outcome table2() {
  const auto null = run_sim_study(sim1d(0.0, 200, false)).summary;
  const double f10 = null.row("reject_0.1_1").mean;
  const double f05 = null.row("reject_0.05_1").mean;
  const double se10 = std::sqrt(0.10 * 0.90 / 200.0);
  const double se05 = std::sqrt(0.05 * 0.95 / 200.0);
  const bool null_ok = std::abs(f10 - 0.10) <= 3 * se10 && std::abs(f05 - 0.05) <= 3 * se05;

  const auto alt = run_sim_study(sim1d(0.3, 100, false)).summary;
  bool all_reject = true;
  for (double lv : kDefaultSigLevels) {
    all_reject = all_reject && alt.row("reject_" + fmt_num(lv) + "_1").mean == 1.0;
  }
  return {null_ok && all_reject,
          "rho=0 rejection " + num(f10) + " at 0.10, " + num(f05) + " at 0.05; rho=0.3 " +
              (all_reject ? "all" : "NOT all") + " rejected, max T " +
              num(alt.row("max_t_stat_1").mean)};
}

// C6
Outcome table3() {
  const auto s = run_sim_study(sim1d(0.5, 100, true)).summary;
  const double a = s.row("alpha_hat_1").mean;
  const double lga = s.row("lga_alpha_1").mean;
  const double b1 = s.row("beta_hat_1").mean;
  const bool ok = std::abs(a - 2.998) <= 0.02 && lga >= 2.68 && lga <= 2.80 &&
                  std::abs(b1 + 2.09) <= 0.15;
  return {ok, "alpha " + num(a) + ", LGA alpha " + num(lga) + ", beta1 " + num(b1)};
}

// C7
Outcome table56() {
  auto c = ExperimentConfig::defaults(Study::sim2d);
  c.replications = 50;
  c.fit_lga = false;
  c.threads = g_threads;
  const auto s = run_sim_study(c).summary;
  const double r1 = s.row("rho_hat_1").mean, r2 = s.row("rho_hat_2").mean;
  const double a1 = s.row("alpha_hat_1").mean, a2 = s.row("alpha_hat_2").mean,
               a3 = s.row("alpha_hat_3").mean;
  const double t1 = s.row("max_t_stat_1").mean, t2 = s.row("max_t_stat_2").mean;
  const bool ok = std::abs(r1 - 1.988) <= 0.05 && std::abs(r2 - 3.966) <= 0.05 &&
                  std::abs(a1 - 1.993) <= 0.05 && std::abs(a2) <= 0.05 &&
                  std::abs(a3 - 2.992) <= 0.05 && t1 < -10 && t2 < -10 && s.failed == 0;
  return {ok, "rho (" + num(r1) + ", " + num(r2) + "), alpha (" + num(a1) + ", " + num(a2) +
                  ", " + num(a3) + "), max T (" + num(t1) + ", " + num(t2) + ")"};
}

// C8
Outcome null_calibration() {
  const auto res = run_sim_study(sim1d(0.0, 500, false));
  std::vector<double> t;
  for (const auto& r : res.records) {
    if (r.ok) t.push_back(r.t_stat[0]);
  }
  const auto [D, p] = ks_test_normal(t);
  return {p > 0.01 && t.size() == 500,
          std::to_string(t.size()) + " statistics, KS D " + num(D) + ", p " + num(p)};
}

// C9. The SE of a single curve's slope is estimated from independent
// replications: neighbouring RV(k) share most of their data, so the OLS
// residuals are far from independent.
struct RvSlopes {
  double slope0 = 0.0;
  double ols_se0 = 0.0;
  double mean = 0.0;
  double sd = 0.0;
};

RvSlopes rv_slopes(double rho, std::size_t reps) {
  auto c = ExperimentConfig::defaults(Study::rvcurve);
  c.rho_true = {rho};
  RvSlopes out;
  std::vector<double> slopes;
  for (std::size_t r = 0; r < reps; ++r) {
    c.seed = ExperimentConfig{}.seed + 7919 * r;
    std::vector<double> x, y;
    for (const auto& [k, rv] : run_rv_curve(c)) {
      x.push_back(static_cast<double>(k));
      y.push_back(rv);
    }
    const LineFit f = least_squares_line(x, y);
    if (r == 0) {
      out.slope0 = f.slope;
      out.ols_se0 = f.slope_se;
    }
    slopes.push_back(f.slope);
  }
  double ss = 0.0;
  for (double s : slopes) out.mean += s / static_cast<double>(reps);
  for (double s : slopes) ss += (s - out.mean) * (s - out.mean);
  out.sd = std::sqrt(ss / static_cast<double>(reps - 1));
  return out;
}

Outcome rv_phenomenon(const RvSlopes& smooth, const RvSlopes& direct) {
  const bool ok = smooth.slope0 > 2.0 * smooth.sd && std::abs(direct.slope0) < 2.0 * direct.sd;
  return {ok, "rho=10 slope " + num(smooth.slope0) + " (SE " + num(smooth.sd) + "); rho=0 slope " +
                  num(direct.slope0) + " (SE " + num(direct.sd) + "), replication mean " +
                  num(direct.mean)};
}

// C10
Outcome realdata_round_trip() {
  const double h_n = 1.0 / 2560.0;
  const std::size_t n = 113664;
  const ModelSpec model = realdata_model();
  SimConfig sim;
  sim.h_fine = h_n / 100.0;
  sim.n_fine = n * 100;
  sim.burn_in = 1.0;
  sim.seed = 20190620;
  sim.x_init = {0.0};
  const auto s = simulate_convolved(model, std::vector<double>{151.919},
                                    std::vector<double>{-2.146, 0.552}, sim,
                                    std::vector<double>{1.037}, h_n, n);
  const auto path = std::filesystem::temp_directory_path() / "convdiff_acceptance_eeg.txt";
  {
    std::ofstream f(path);
    for (std::size_t i = 0; i < s.rows(); ++i) f << fmt_num(s.at(i, 0)) << '\n';
  }
  auto c = ExperimentConfig::defaults(Study::realdata);
  c.input_path = path.string();
  const auto rep = run_real_data(c);
  std::filesystem::remove(path);
  const double rho = rep.fits.at(0).rho_hat;
  const double alpha = rep.fits.at(0).lse.alpha_hat[0];
  const bool ok = std::abs(rho - 1.037) <= 0.05 && std::abs(alpha / 151.919 - 1.0) <= 0.03;
  return {ok, "rho_hat " + num(rho) + ", alpha_hat " + num(alpha) + "; LSE " +
                  format_ou_equation(rep.fits[0].lse)};
}

// Qualitative large-rho check: LGA collapses.
Outcome lga_collapse() {
  const auto s = run_sim_study(sim1d(10.0, 20, true)).summary;
  const double lga = s.row("lga_alpha_1").mean;
  return {lga < 1.2, "LGA alpha " + num(lga) + ", proposed alpha " +
                         num(s.row("alpha_hat_1").mean) + " (truth 3)"};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--threads" && i + 1 < argc) {
      g_threads = std::strtoul(argv[++i], nullptr, 10);
    } else if (a == "--skip-info") {
      g_info = false;
    } else {
      only.insert(std::atoi(a.c_str()));
    }
  }
  auto want = [&](int id) { return only.empty() || only.count(id) > 0; };
  set_warning_sink([](const std::string&) {});

  if (want(1)) report("C1", "kernel closed forms vs quadrature", kernel_oracle);
  if (want(2)) report("C2", "continuity at piecewise boundaries", continuity);
  if (want(3)) report("C3", "ratio R and its inverse", ratio_function);
  if (want(4)) {
    report("C4", "rho_hat means, 1-d OU", [] { return table1(1); });
    if (g_info) report("C4", "same study at m=2", [] { return table1(2); }, false);
  }
  if (want(5)) report("C5", "test size and power, 1-d OU", table2);
  if (want(6)) report("C6", "alpha/beta vs LGA at rho=0.5", table3);
  if (want(7)) report("C7", "2-d OU at rho=(2,4)", table56);
  if (want(8)) report("C8", "T_n ~ N(0,1) under rho=0 (KS)", null_calibration);
  if (want(9)) {
    RvSlopes smooth, direct;
    report("C9", "RV(k) slope", [&] {
      smooth = rv_slopes(10.0, 50);
      direct = rv_slopes(0.0, 50);
      return rv_phenomenon(smooth, direct);
    });
    if (g_info) {
      report("C9", "same slopes against the OLS SE",
             [&] {
               const bool ok = smooth.slope0 > 0 && std::abs(direct.slope0) < 2 * direct.ols_se0;
               return Outcome{ok, "rho=10 OLS SE " + num(smooth.ols_se0) + "; rho=0 slope " +
                                      num(direct.slope0) + " vs OLS SE " + num(direct.ols_se0) +
                                      (ok ? "" : " (would fail)")};
             },
             false);
    }
  }
  if (want(10)) report("C10", "real-data round trip", realdata_round_trip);
  if (want(11)) report("LGA", "LGA collapse at rho=10", lga_collapse);

  std::printf("%d criterion(s) failed\n", g_failures);
  return g_failures == 0 ? 0 : 1;
}

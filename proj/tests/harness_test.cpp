#include "convdiff/harness.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "convdiff/errors.hpp"
#include "convdiff/format.hpp"
#include "convdiff/kernel_math.hpp"

using namespace convdiff;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("convdiff_harness_" + name);
}

ExperimentConfig small_sim1d() {
  auto c = ExperimentConfig::defaults(Study::sim1d);
  c.replications = 6;
  c.n_obs = 3000;
  c.starts = 3;
  return c;
}

void write_column(const std::filesystem::path& p, const ConvolvedSeries& s) {
  std::ofstream f(p);
  f << "eeg\n";
  for (std::size_t i = 0; i < s.rows(); ++i) f << fmt_num(s.at(i, 0)) << '\n';
}

}  // namespace

TEST(Summarize, Examples) {
  auto [m1, r1] = summarize({{1.0}, {3.0}}, {2.0});
  EXPECT_DOUBLE_EQ(m1[0], 2.0);
  EXPECT_DOUBLE_EQ(r1[0], 1.0);

  auto [m2, r2] = summarize({{2.5, -1.0}, {2.5, -1.0}}, {2.5, -1.0});
  EXPECT_DOUBLE_EQ(r2[0], 0.0);
  EXPECT_DOUBLE_EQ(r2[1], 0.0);

  auto [m3, r3] = summarize({{0.0}, {0.0}, {6.0}}, {2.0});
  EXPECT_DOUBLE_EQ(m3[0], 2.0);
  EXPECT_NEAR(r3[0], std::sqrt(8.0), 1e-14);
  EXPECT_GE(r3[0], std::abs(m3[0] - 2.0));

  EXPECT_THROW(summarize({}, {1.0}), DataError);
}

TEST(Config, KeyValueParsing) {
  std::istringstream in("# comment\nreplications = 7\n\nrho=0.2  # trailing\nsig_levels=0.1,0.01\n");
  auto c = ExperimentConfig::defaults(Study::sim1d);
  for (const auto& [k, v] : parse_key_values(in)) c.set(k, v);
  EXPECT_EQ(c.replications, 7u);
  ASSERT_EQ(c.rho_true.size(), 1u);
  EXPECT_DOUBLE_EQ(c.rho_true[0], 0.2);
  EXPECT_EQ(c.sig_levels, (std::vector<double>{0.1, 0.01}));
  EXPECT_NO_THROW(c.validate());
}

TEST(Config, Errors) {
  auto c = ExperimentConfig::defaults(Study::sim1d);
  EXPECT_THROW(c.set("no_such_key", "1"), ConfigError);
  EXPECT_THROW(c.set("replications", "ten"), ConfigError);
  EXPECT_THROW(c.set("replications", "-1"), ConfigError);
  EXPECT_THROW(c.set("fit_lga", "maybe"), ConfigError);
  EXPECT_THROW(split_key_value("novalue"), ConfigError);
  std::istringstream bad("reps=3\njunk\n");
  try {
    parse_key_values(bad);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }

  auto outside = ExperimentConfig::defaults(Study::sim1d);
  outside.alpha_true = {20.0};
  EXPECT_THROW(outside.validate(), ConfigError);
  auto wrong_dim = ExperimentConfig::defaults(Study::sim2d);
  wrong_dim.rho_true = {1.0};
  EXPECT_THROW(wrong_dim.validate(), ConfigError);
  auto rho_over = ExperimentConfig::defaults(Study::sim2d);
  rho_over.rho_true = {2.0, 11.0};
  EXPECT_THROW(rho_over.validate(), ConfigError);
  auto no_input = ExperimentConfig::defaults(Study::realdata);
  EXPECT_THROW(no_input.validate(), ConfigError);
  EXPECT_NO_THROW(ExperimentConfig::defaults(Study::sim2d).validate());
  EXPECT_NO_THROW(ExperimentConfig::defaults(Study::rvcurve).validate());
}

TEST(Config, PaperScaleAndSimConfig) {
  auto c = ExperimentConfig::defaults(Study::sim1d);
  c.set("paper_scale", "true");
  EXPECT_EQ(c.replications, 1000u);
  EXPECT_EQ(c.m_precision, 2);
  const SimConfig s = c.sim_config(3);
  EXPECT_DOUBLE_EQ(s.h_fine, c.h_n / 100.0);
  EXPECT_EQ(s.n_fine, c.n_obs * 100);
  EXPECT_EQ(s.seed, stream_seed(c.seed, 3));

  // Burn-in grows to cover the widest window.
  auto w = ExperimentConfig::defaults(Study::sim1d);
  w.rho_true = {90.0};
  EXPECT_DOUBLE_EQ(w.effective_burn_in(), 90.0 * w.h_n);
  EXPECT_DOUBLE_EQ(ExperimentConfig::defaults(Study::sim1d).effective_burn_in(),
                   std::pow(10.0, -7.0 / 3.0));
}

TEST(SimStudy, ReproducibleAcrossThreadCounts) {
  auto c = small_sim1d();
  c.threads = 1;
  const auto a = run_sim_study(c);
  c.threads = 3;
  const auto b = run_sim_study(c);
  std::ostringstream sa, sb, ra, rb;
  write_summary_csv(a.summary, sa);
  write_summary_csv(b.summary, sb);
  write_replications_csv(c, a.records, ra);
  write_replications_csv(c, b.records, rb);
  EXPECT_EQ(sa.str(), sb.str());
  EXPECT_EQ(ra.str(), rb.str());
  EXPECT_EQ(a.summary.failed, 0u);
  for (std::size_t i = 0; i < a.records.size(); ++i) EXPECT_EQ(a.records[i].index, i);
}

TEST(SimStudy, SummaryLayout) {
  auto c = small_sim1d();
  const auto res = run_sim_study(c);
  const auto& s = res.summary;
  EXPECT_DOUBLE_EQ(s.row("rho_hat_1").truth, 0.5);
  EXPECT_EQ(s.row("rho_hat_1").count, c.replications);
  EXPECT_GE(s.row("rho_hat_1").rmse, std::abs(s.row("rho_hat_1").mean - 0.5));
  EXPECT_NO_THROW(s.row("alpha_hat_1"));
  EXPECT_NO_THROW(s.row("beta_hat_2"));
  EXPECT_NO_THROW(s.row("lga_alpha_1"));
  EXPECT_NO_THROW(s.row("max_t_stat_1"));
  for (double lv : c.sig_levels) {
    const double f = s.row("reject_" + fmt_num(lv) + "_1").mean;
    EXPECT_GE(f, 0.0);
    EXPECT_LE(f, 1.0);
  }
  EXPECT_THROW(s.row("nope"), RangeError);

  std::ostringstream out;
  write_summary_csv(s, out);
  EXPECT_EQ(out.str().rfind("metric,truth,mean,rmse,mc_se,count\n", 0), 0u);
}

TEST(SimStudy, KnownRhoPlugIn) {
  auto c = small_sim1d();
  c.replications = 2;
  c.fit_lga = false;
  c.set("plug_in", "known");
  const auto res = run_sim_study(c);
  EXPECT_THROW(res.summary.row("lga_alpha_1"), RangeError);
  EXPECT_NEAR(res.summary.row("alpha_hat_1").mean, 3.0, 0.3);
}

TEST(SimStudy, RunAndWriteCreatesFiles) {
  auto c = small_sim1d();
  c.replications = 2;
  c.output_dir = temp_file("out").string();
  std::filesystem::remove_all(c.output_dir);
  const std::string report = run_and_write(c);
  EXPECT_TRUE(std::filesystem::exists(std::filesystem::path(c.output_dir) / "summary.csv"));
  EXPECT_TRUE(std::filesystem::exists(std::filesystem::path(c.output_dir) / "replications.csv"));
  EXPECT_NE(report.find("rho_hat_1"), std::string::npos);
  std::filesystem::remove_all(c.output_dir);
}

TEST(NumericTable, HeaderWhitespaceAndErrors) {
  std::istringstream csv("a,b\n1,2\n3,4\n");
  const auto t = read_numeric_table(csv);
  EXPECT_EQ(t.header, (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(t.columns[1], (std::vector<double>{2.0, 4.0}));

  std::istringstream ws("# note\n1 2\n3\t4\n");
  const auto u = read_numeric_table(ws);
  EXPECT_TRUE(u.header.empty());
  EXPECT_EQ(u.columns[0], (std::vector<double>{1.0, 3.0}));

  std::istringstream bad("x\n1\n2\noops\n");
  try {
    read_numeric_table(bad);
    FAIL();
  } catch (const DataError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("line 4"), std::string::npos);
    EXPECT_NE(msg.find("column 1"), std::string::npos);
  }
  std::istringstream ragged("1,2\n3\n");
  EXPECT_THROW(read_numeric_table(ragged), DataError);
  std::istringstream empty("");
  EXPECT_THROW(read_numeric_table(empty), DataError);
}

TEST(RealData, ConstantColumnIsDataError) {
  const auto p = temp_file("const.csv");
  {
    std::ofstream f(p);
    f << "x\n";
    for (int i = 0; i < 100; ++i) f << "1.5\n";
  }
  auto c = ExperimentConfig::defaults(Study::realdata);
  c.input_path = p.string();
  EXPECT_THROW(run_real_data(c), DataError);
  c.input_path = temp_file("missing.csv").string();
  EXPECT_THROW(run_real_data(c), DataError);
  std::filesystem::remove(p);
}

TEST(RealData, NullCalibrationOnDirectObservations) {
  // rho = 0: the statistic must stay inside the two-sided 0.001 band.
  const double z = -gaussian_quantile(0.001);
  const auto p = temp_file("null.csv");
  const ModelSpec model = realdata_model();
  int inside = 0;
  const int seeds = 20;
  for (int seed = 0; seed < seeds; ++seed) {
    SimConfig sim;
    sim.h_fine = 1.0 / 2560.0;
    sim.n_fine = 5000;
    sim.burn_in = 0.1;
    sim.seed = 1000 + seed;
    sim.x_init = {0.0};
    const auto s = simulate_convolved(model, std::vector<double>{151.919},
                                      std::vector<double>{-2.146, 0.552}, sim,
                                      std::vector<double>{0.0}, 1.0 / 2560.0, 5000);
    write_column(p, s);
    auto c = ExperimentConfig::defaults(Study::realdata);
    c.input_path = p.string();
    c.fit_columns.clear();
    const auto rep = run_real_data(c);
    ASSERT_EQ(rep.columns.size(), 1u);
    EXPECT_EQ(rep.columns[0].name, "eeg");
    EXPECT_DOUBLE_EQ(rep.h_n, 1.0 / 2560.0);
    if (std::abs(rep.columns[0].t_stat) < z) ++inside;
  }
  EXPECT_GE(inside, seeds - 1);
  std::filesystem::remove(p);
}

TEST(RealData, ReportLayout) {
  FitResult f;
  f.alpha_hat = {151.919};
  f.beta_hat = {-2.146, 0.552};
  EXPECT_EQ(format_ou_equation(f), "dX_t = ((-2.146) X_t + (0.552)) dt + (151.919) dw_t");
}

TEST(LineFit, ExactAndNoisy) {
  const auto f = least_squares_line({1, 2, 3, 4}, {3, 5, 7, 9});
  EXPECT_NEAR(f.slope, 2.0, 1e-14);
  EXPECT_NEAR(f.intercept, 1.0, 1e-13);
  EXPECT_NEAR(f.slope_se, 0.0, 1e-12);
  // Residuals (+1,-1,-1,+1)/2 around slope 0: SSR 1, Sxx 5.
  const auto g = least_squares_line({1, 2, 3, 4}, {0.5, -0.5, -0.5, 0.5});
  EXPECT_NEAR(g.slope, 0.0, 1e-14);
  EXPECT_NEAR(g.slope_se, std::sqrt(1.0 / 2.0 / 5.0), 1e-14);
  EXPECT_THROW(least_squares_line({1, 1, 1}, {1, 2, 3}), DataError);
}

TEST(KsTest, StatisticAndPower) {
  auto [d0, p0] = ks_test_normal({0.0});
  EXPECT_DOUBLE_EQ(d0, 0.5);

  NormalGenerator g(7);
  std::vector<double> z(1000), shifted(1000);
  for (std::size_t i = 0; i < z.size(); ++i) {
    z[i] = g();
    shifted[i] = z[i] + 0.5;
  }
  EXPECT_GT(ks_test_normal(z).second, 0.01);
  EXPECT_LT(ks_test_normal(shifted).second, 1e-6);
}

TEST(RvCurve, SimulatedCurveLength) {
  auto c = ExperimentConfig::defaults(Study::rvcurve);
  c.n_obs = 2000;
  c.k_max = 10;
  const auto curve = run_rv_curve(c);
  ASSERT_EQ(curve.size(), 10u);
  EXPECT_EQ(curve.front().first, 1u);
  EXPECT_GT(curve.back().second, curve.front().second);
}

TEST(Pool, PropagatesFirstException) {
  EXPECT_THROW(run_pool(5, 2,
                        [](std::size_t i) -> ReplicationRecord {
                          if (i == 3) throw ConfigError("boom");
                          return ReplicationRecord{i};
                        }),
               ConfigError);
}

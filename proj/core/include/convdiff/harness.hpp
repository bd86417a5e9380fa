#pragma once

// Config-driven experiment runner: simulation studies, real-data workflow,
// RV curves, summaries and CSV reporting.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "convdiff/conv_obs.hpp"
#include "convdiff/inference.hpp"
#include "convdiff/sde_sim.hpp"

namespace convdiff {

enum class Study { sim1d, sim2d, realdata, rvcurve };

std::string to_string(Study s);

struct ExperimentConfig {
  Study study = Study::sim1d;
  std::size_t replications = 100;
  std::size_t n_obs = 100000;
  double h_n = 0.0;
  int m_precision = 1;
  double burn_in = 0.0;
  std::vector<double> rho_true;
  std::vector<double> alpha_true;
  std::vector<double> beta_true;
  std::vector<double> x_init;
  double rho_bar = SmoothingBound::kDefault;
  std::uint64_t seed = 20190620;
  std::vector<double> sig_levels = kDefaultSigLevels;
  bool known_rho = false;  // fit with rho_true instead of rho_hat
  bool fit_lga = true;
  std::size_t threads = 0;  // 0: hardware concurrency
  std::size_t starts = 8;
  double tol = 1e-8;

  // realdata
  std::string input_path;
  std::vector<std::size_t> fit_columns{1};  // 1-based
  double sample_rate_hz = 512.0;
  double time_unit_s = 5.0;

  // rvcurve
  std::size_t k_max = 100;

  std::string output_dir;
  std::string dump_path;         // latent path of replication 0
  std::string series_dump_path;  // observed series of replication 0

  /// Defaults of a study at desk scale.
  static ExperimentConfig defaults(Study study);
  /// Replications 1000 and m = 2.
  void apply_paper_scale();
  /// Throws ConfigError when a key is unknown or a value does not parse.
  void set(const std::string& key, const std::string& value);
  void validate() const;

  std::size_t dim() const;
  ModelSpec model() const;
  SmoothingBound bound() const { return SmoothingBound(rho_bar); }
  /// Burn-in actually simulated: at least the widest averaging window.
  double effective_burn_in() const;
  SimConfig sim_config(std::size_t replication) const;
  OptimizeOptions optimizer() const;
};

/// key=value lines, '#' comments. Later keys override earlier ones.
std::vector<std::pair<std::string, std::string>> parse_key_values(std::istream& in);
std::pair<std::string, std::string> split_key_value(const std::string& token);

struct ReplicationRecord {
  std::size_t index = 0;
  bool ok = false;
  std::string error;
  std::vector<double> rho_hat, Rn, t_stat, p_value;
  std::vector<double> alpha_hat, beta_hat;
  std::vector<double> lga_alpha, lga_beta;
};

struct SummaryRow {
  std::string metric;
  double truth = 0.0;  // NaN when not applicable
  double mean = 0.0;
  double rmse = 0.0;   // NaN when not applicable
  double mc_se = 0.0;  // Monte Carlo standard error of mean
  std::size_t count = 0;
};

struct StudySummary {
  std::vector<SummaryRow> rows;
  std::size_t replications = 0;
  std::size_t failed = 0;

  const SummaryRow& row(const std::string& metric) const;
};

/// Coordinatewise mean and sqrt(mean squared error vs truth).
std::pair<std::vector<double>, std::vector<double>> summarize(
    const std::vector<std::vector<double>>& values, const std::vector<double>& truths);

/// One replication of a simulation study.
ReplicationRecord run_replication(const ExperimentConfig& cfg, std::size_t r);

/// Runs f(0..count-1) on `threads` workers; results come back in index order.
std::vector<ReplicationRecord> run_pool(std::size_t count, std::size_t threads,
                                        const std::function<ReplicationRecord(std::size_t)>& f);

struct SimStudyResult {
  StudySummary summary;
  std::vector<ReplicationRecord> records;
};

SimStudyResult run_sim_study(const ExperimentConfig& cfg);

void write_summary_csv(const StudySummary& s, std::ostream& out);
void write_replications_csv(const ExperimentConfig& cfg,
                            const std::vector<ReplicationRecord>& records, std::ostream& out);

/// Numeric columns separated by commas or whitespace. A first line that does
/// not parse is taken as a header; '#' lines are skipped.
struct NumericTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> columns;
};
NumericTable read_numeric_table(std::istream& in);

ConvolvedSeries series_from_columns(const NumericTable& table,
                                    const std::vector<std::size_t>& columns, double h_n);

struct ColumnReport {
  std::size_t column = 0;  // 1-based
  std::string name;
  double rho_hat = 0.0;
  double Rn = 0.0;
  double t_stat = 0.0;
  double p_value = 0.0;
  std::vector<bool> reject;  // per sig level
};

struct ColumnFit {
  std::size_t column = 0;
  FitResult lga;
  FitResult lse;
  double rho_hat = 0.0;
};

struct RealDataReport {
  double h_n = 0.0;
  std::size_t n = 0;
  std::vector<double> sig_levels;
  std::vector<ColumnReport> columns;
  std::vector<ColumnFit> fits;
};

/// Real-data boxes: alpha in [0.01, 200], beta in [-100, -0.01] x [-100, 100].
ModelSpec realdata_model();

RealDataReport run_real_data(const ExperimentConfig& cfg);
void write_real_data_report(const RealDataReport& r, std::ostream& table_csv,
                            std::ostream& fits_csv);
/// dX = ((b1) X + (b2)) dt + (a) dw
std::string format_ou_equation(const FitResult& fit);

/// RV(k), k = 1..k_max, of replication 0 (simulated) or of the input file.
std::vector<std::pair<std::size_t, double>> run_rv_curve(const ExperimentConfig& cfg);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_se = 0.0;
};
LineFit least_squares_line(const std::vector<double>& x, const std::vector<double>& y);

/// Kolmogorov-Smirnov test against N(0, 1): statistic D and asymptotic p-value.
std::pair<double, double> ks_test_normal(std::vector<double> sample);

/// Writes summary.csv and replications.csv (or the real-data files) to
/// cfg.output_dir and returns a short human-readable report.
std::string run_and_write(const ExperimentConfig& cfg);

}  // namespace convdiff

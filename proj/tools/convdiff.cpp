// convdiff: command line front end for the simulation studies, the real-data
// workflow, RV curves, kernel tables and one-off estimation.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "convdiff/errors.hpp"
#include "convdiff/format.hpp"
#include "convdiff/harness.hpp"
#include "convdiff/kernel_math.hpp"

using namespace convdiff;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;

struct RunArgs {
  std::string config_file;
  bool paper_scale = false;
  std::vector<std::string> overrides;
};

void add_run_options(CLI::App* sub, RunArgs& args) {
  sub->add_option("--config", args.config_file, "key=value configuration file");
  sub->add_flag("--paper-scale", args.paper_scale, "1000 replications and m = 2");
  sub->add_option("overrides", args.overrides, "key=value overrides applied after --config");
}

ExperimentConfig build_config(Study study, const RunArgs& args) {
  ExperimentConfig cfg = ExperimentConfig::defaults(study);
  if (args.paper_scale) cfg.apply_paper_scale();
  if (!args.config_file.empty()) {
    std::ifstream f(args.config_file);
    if (!f) throw ConfigError("cannot read config file " + args.config_file);
    for (const auto& [k, v] : parse_key_values(f)) cfg.set(k, v);
  }
  for (const auto& token : args.overrides) {
    const auto [k, v] = split_key_value(token);
    cfg.set(k, v);
  }
  cfg.validate();
  return cfg;
}

void kernel_table(double rho_bar, double step, double rho_max) {
  const SmoothingBound bound(rho_bar);
  if (!(step > 0.0)) throw ConfigError("--step must be positive");
  if (!(rho_max >= 0.0) || rho_max > rho_bar) throw ConfigError("--max must lie in [0, rho_bar]");
  std::cout << "rho_i,rho_j,f_G,branch_G,f_D0,branch_D0\n";
  const auto count = static_cast<std::size_t>(rho_max / step + 1e-9);
  for (std::size_t a = 0; a <= count; ++a) {
    for (std::size_t b = 0; b <= count; ++b) {
      const double ri = static_cast<double>(a) * step;
      const double rj = static_cast<double>(b) * step;
      const auto g = f_G(ri, rj, bound);
      const auto d = f_D0(ri, rj, bound);
      std::cout << fmt_num(ri) << ',' << fmt_num(rj) << ',' << fmt_num(g.value) << ',' << g.branch
                << ',' << fmt_num(d.value) << ',' << d.branch << '\n';
    }
  }
}

struct EstimateArgs {
  std::string input;
  double h = 0.0;
  double rho_bar = SmoothingBound::kDefault;
  std::string model = "ou1d";
  std::vector<double> known_rho;
  std::vector<double> sig_levels = kDefaultSigLevels;
  std::vector<std::size_t> columns;
  bool lga = true;
};

void estimate(const EstimateArgs& a) {
  const bool two_d = a.model == "ou2d";
  if (!two_d && a.model != "ou1d") throw ConfigError("--model must be ou1d or ou2d");
  if (!(a.h > 0.0)) throw ConfigError("--h must be positive");
  std::vector<std::size_t> cols = a.columns;
  if (cols.empty()) cols = two_d ? std::vector<std::size_t>{1, 2} : std::vector<std::size_t>{1};
  if (cols.size() != (two_d ? 2u : 1u)) throw ConfigError("--columns does not match --model");
  if (!a.known_rho.empty() && a.known_rho.size() != cols.size()) {
    throw ConfigError("--known-rho needs one value per column");
  }
  const SmoothingBound bound(a.rho_bar);
  const ModelSpec model = two_d ? ou_2d() : realdata_model();

  std::ifstream f(a.input);
  if (!f) throw DataError("cannot open " + a.input);
  const NumericTable table = read_numeric_table(f);
  const ConvolvedSeries s = series_from_columns(table, cols, a.h);

  const RhoEstimate est = estimate_rho(s, bound);
  const TestReport test = smoothing_test(s, a.sig_levels);
  std::cout << "axis,rho_hat,Rn,t_stat,p_value\n";
  for (std::size_t i = 0; i < cols.size(); ++i) {
    std::cout << (i + 1) << ',' << fmt_num(est.rho_hat[i]) << ',' << fmt_num(est.Rn[i]) << ','
              << fmt_num(test.t_stat[i]) << ',' << fmt_num(test.p_value[i]) << '\n';
  }
  const std::vector<double>& rho = a.known_rho.empty() ? est.rho_hat : a.known_rho;
  const FitResult lse = lse_fit(s, rho, model, bound);
  auto row = [](const char* name, const FitResult& r) {
    std::cout << name;
    for (double v : r.alpha_hat) std::cout << ',' << fmt_num(v);
    for (double v : r.beta_hat) std::cout << ',' << fmt_num(v);
    std::cout << '\n';
  };
  std::cout << "\nmethod";
  for (std::size_t i = 0; i < model.alpha_dim(); ++i) std::cout << ",alpha_" << (i + 1);
  for (std::size_t i = 0; i < model.beta_dim(); ++i) std::cout << ",beta_" << (i + 1);
  std::cout << '\n';
  row("lse", lse);
  if (a.lga) row("lga", lga_estimate(s, model));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Estimation for diffusions observed through a moving-average window"};
  app.require_subcommand(1);

  RunArgs sim1d_args, sim2d_args, real_args, rv_args;
  auto* sim1d = app.add_subcommand("sim1d", "1-d Ornstein-Uhlenbeck simulation study");
  add_run_options(sim1d, sim1d_args);
  auto* sim2d = app.add_subcommand("sim2d", "2-d Ornstein-Uhlenbeck simulation study");
  add_run_options(sim2d, sim2d_args);
  auto* real = app.add_subcommand("realdata", "smoothing test and OU fit of numeric columns");
  add_run_options(real, real_args);
  auto* rv = app.add_subcommand("rv-curve", "realized volatility RV(k), k = 1..k_max");
  add_run_options(rv, rv_args);

  double table_bar = SmoothingBound::kDefault, table_step = 0.25, table_max = 4.0;
  auto* table = app.add_subcommand("kernel-table", "f_G and f_D0 on a grid of window pairs");
  table->add_option("--rho-bar", table_bar, "upper bound of the smoothing parameter");
  table->add_option("--step", table_step, "grid step");
  table->add_option("--max", table_max, "largest grid value");

  EstimateArgs est;
  auto* estimate_cmd = app.add_subcommand("estimate", "estimate rho, alpha and beta from a file");
  estimate_cmd->set_help_flag("--help", "Print this help message and exit");
  estimate_cmd->add_option("--input", est.input, "numeric CSV or whitespace file")->required();
  estimate_cmd->add_option("--h", est.h, "sampling step h_n")->required();
  estimate_cmd->add_option("--rho-bar", est.rho_bar, "upper bound of the smoothing parameter");
  estimate_cmd->add_option("--model", est.model, "ou1d or ou2d");
  estimate_cmd->add_option("--known-rho", est.known_rho, "plug in these windows instead of rho_hat")
      ->delimiter(',');
  estimate_cmd->add_option("--sig-levels", est.sig_levels, "test levels")->delimiter(',');
  estimate_cmd->add_option("--columns", est.columns, "1-based columns")->delimiter(',');
  estimate_cmd->add_flag("!--no-lga", est.lga, "skip the LGA baseline");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*table) {
      kernel_table(table_bar, table_step, table_max);
    } else if (*estimate_cmd) {
      estimate(est);
    } else {
      ExperimentConfig cfg;
      if (*sim1d) cfg = build_config(Study::sim1d, sim1d_args);
      else if (*sim2d) cfg = build_config(Study::sim2d, sim2d_args);
      else if (*real) cfg = build_config(Study::realdata, real_args);
      else cfg = build_config(Study::rvcurve, rv_args);
      std::cout << run_and_write(cfg);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DomainError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const RangeError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const SimulationError& e) {
    std::cerr << "simulation error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

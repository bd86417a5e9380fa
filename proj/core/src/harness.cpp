#include "convdiff/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>
#include <tuple>

#include "convdiff/errors.hpp"
#include "convdiff/format.hpp"
#include "convdiff/kernel_math.hpp"
#include "convdiff/variation_stats.hpp"

namespace convdiff {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_real(const std::string& key, const std::string& v) {
  const std::string t = trim(v);
  char* end = nullptr;
  const double x = std::strtod(t.c_str(), &end);
  if (t.empty() || *end != '\0' || !std::isfinite(x)) {
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  }
  return x;
}

std::size_t parse_count(const std::string& key, const std::string& v) {
  const double x = parse_real(key, v);
  if (x < 0.0 || x != std::floor(x) || x > 1e15) {
    throw ConfigError(key + ": expected a nonnegative integer, got '" + v + "'");
  }
  return static_cast<std::size_t>(x);
}

std::vector<double> parse_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(parse_real(key, cell));
  if (out.empty()) throw ConfigError(key + ": empty list");
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  const std::string t = trim(v);
  if (t == "1" || t == "true" || t == "yes" || t == "on") return true;
  if (t == "0" || t == "false" || t == "no" || t == "off") return false;
  throw ConfigError(key + ": expected true/false, got '" + v + "'");
}

std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt_num(v[i]);
  return s;
}

void check_inside(const std::string& what, const std::vector<double>& v, const ParamBox& box) {
  if (v.size() != box.size()) {
    throw ConfigError(what + " needs " + std::to_string(box.size()) + " values, got " +
                      std::to_string(v.size()));
  }
  if (!box.contains(v)) throw ConfigError(what + " = " + join(v) + " lies outside its box");
}

double max_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : *std::max_element(v.begin(), v.end());
}

double parse_cell(const std::string& cell, bool& ok) {
  const std::string t = trim(cell);
  char* end = nullptr;
  const double x = std::strtod(t.c_str(), &end);
  ok = !t.empty() && *end == '\0' && std::isfinite(x);
  return x;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  if (line.find(',') != std::string::npos) {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  } else {
    std::stringstream ss(line);
    std::string cell;
    while (ss >> cell) out.push_back(cell);
  }
  return out;
}

}  // namespace

std::string to_string(Study s) {
  switch (s) {
    case Study::sim1d: return "sim1d";
    case Study::sim2d: return "sim2d";
    case Study::realdata: return "realdata";
    case Study::rvcurve: return "rvcurve";
  }
  return "?";
}

ExperimentConfig ExperimentConfig::defaults(Study study) {
  ExperimentConfig c;
  c.study = study;
  c.h_n = std::pow(10.0, -10.0 / 3.0);
  c.burn_in = std::pow(10.0, -7.0 / 3.0);
  c.output_dir = "convdiff_out/" + to_string(study);
  switch (study) {
    case Study::sim1d:
      c.rho_true = {0.5};
      c.alpha_true = {3.0};
      c.beta_true = {-2.0, 1.0};
      c.x_init = {0.0};
      c.rho_bar = 100.0;
      break;
    case Study::sim2d:
      c.rho_true = {2.0, 4.0};
      c.alpha_true = {2.0, 0.0, 3.0};
      c.beta_true = {-2.0, -0.4, 0.0, 0.1, -3.0, 5.0};
      c.x_init = {0.0, 0.0};
      c.rho_bar = 10.0;
      break;
    case Study::realdata:
      c.replications = 1;
      c.rho_bar = 100.0;
      break;
    case Study::rvcurve:
      // dX = -20 X dt + 10 dW observed through a window of 10 steps.
      c.replications = 1;
      c.h_n = 1e-5;
      c.burn_in = std::pow(10.0, -2.0 / 5.0);
      c.rho_true = {10.0};
      c.alpha_true = {10.0};
      c.beta_true = {-20.0, 0.0};
      c.x_init = {0.0};
      c.rho_bar = 100.0;
      c.fit_lga = false;
      break;
  }
  return c;
}

void ExperimentConfig::apply_paper_scale() {
  if (study == Study::sim1d || study == Study::sim2d) replications = 1000;
  m_precision = 2;
}

void ExperimentConfig::set(const std::string& raw_key, const std::string& value) {
  const std::string key = trim(raw_key);
  if (key == "study") {
    const std::string v = trim(value);
    if (v == "sim1d") study = Study::sim1d;
    else if (v == "sim2d") study = Study::sim2d;
    else if (v == "realdata") study = Study::realdata;
    else if (v == "rvcurve" || v == "rv-curve") study = Study::rvcurve;
    else throw ConfigError("study: unknown value '" + value + "'");
  } else if (key == "replications" || key == "reps") {
    replications = parse_count(key, value);
  } else if (key == "n_obs" || key == "n") {
    n_obs = parse_count(key, value);
  } else if (key == "h_n") {
    h_n = parse_real(key, value);
  } else if (key == "m" || key == "m_precision") {
    m_precision = static_cast<int>(parse_count(key, value));
  } else if (key == "burn_in") {
    burn_in = parse_real(key, value);
  } else if (key == "rho_true" || key == "rho") {
    rho_true = parse_list(key, value);
  } else if (key == "alpha_true" || key == "alpha") {
    alpha_true = parse_list(key, value);
  } else if (key == "beta_true" || key == "beta") {
    beta_true = parse_list(key, value);
  } else if (key == "x_init") {
    x_init = parse_list(key, value);
  } else if (key == "rho_bar") {
    rho_bar = parse_real(key, value);
  } else if (key == "seed") {
    seed = parse_count(key, value);
  } else if (key == "sig_levels") {
    sig_levels = parse_list(key, value);
  } else if (key == "plug_in") {
    const std::string v = trim(value);
    if (v == "known") known_rho = true;
    else if (v == "estimated") known_rho = false;
    else throw ConfigError("plug_in: expected 'known' or 'estimated'");
  } else if (key == "fit_lga") {
    fit_lga = parse_bool(key, value);
  } else if (key == "threads") {
    threads = parse_count(key, value);
  } else if (key == "starts") {
    starts = parse_count(key, value);
  } else if (key == "tol") {
    tol = parse_real(key, value);
  } else if (key == "input_path" || key == "input") {
    input_path = trim(value);
  } else if (key == "fit_columns" || key == "column") {
    fit_columns.clear();
    for (double c : parse_list(key, value)) {
      if (c < 1.0 || c != std::floor(c)) throw ConfigError(key + ": columns are 1-based integers");
      fit_columns.push_back(static_cast<std::size_t>(c));
    }
  } else if (key == "sample_rate_hz") {
    sample_rate_hz = parse_real(key, value);
  } else if (key == "time_unit_s") {
    time_unit_s = parse_real(key, value);
  } else if (key == "k_max") {
    k_max = parse_count(key, value);
  } else if (key == "output_dir") {
    output_dir = trim(value);
  } else if (key == "dump_path") {
    dump_path = trim(value);
  } else if (key == "series_dump_path") {
    series_dump_path = trim(value);
  } else if (key == "paper_scale") {
    if (parse_bool(key, value)) apply_paper_scale();
  } else {
    throw ConfigError("unknown configuration key '" + key + "'");
  }
}

std::size_t ExperimentConfig::dim() const { return study == Study::sim2d ? 2 : 1; }

ModelSpec realdata_model() {
  return ou_1d(ParamBox({0.01}, {200.0}), ParamBox({-100.0, -100.0}, {-0.01, 100.0}));
}

ModelSpec ExperimentConfig::model() const {
  switch (study) {
    case Study::sim1d: return ou_1d();
    case Study::sim2d: return ou_2d();
    default: return realdata_model();
  }
}

void ExperimentConfig::validate() const {
  const SmoothingBound b = bound();
  for (double a : sig_levels) {
    if (!(a > 0.0 && a < 1.0)) throw ConfigError("sig_levels must lie in (0, 1)");
  }
  if (starts == 0) throw ConfigError("starts must be positive");
  if (!(tol > 0.0)) throw ConfigError("tol must be positive");
  if (study == Study::realdata || (study == Study::rvcurve && !input_path.empty())) {
    if (input_path.empty()) throw ConfigError("realdata needs input_path");
    if (!(sample_rate_hz > 0.0) || !(time_unit_s > 0.0)) {
      throw ConfigError("sample_rate_hz and time_unit_s must be positive");
    }
    if (study == Study::rvcurve && k_max == 0) throw ConfigError("k_max must be positive");
    return;
  }
  if (!(h_n > 0.0)) throw ConfigError("h_n must be positive");
  if (n_obs < 4) throw ConfigError("n_obs must be at least 4");
  if (m_precision < 0 || m_precision > 6) throw ConfigError("m must lie in [0, 6]");
  if (replications == 0) throw ConfigError("replications must be positive");
  if (!(burn_in >= 0.0)) throw ConfigError("burn_in must be >= 0");
  if (rho_true.size() != dim()) {
    throw ConfigError("rho_true needs " + std::to_string(dim()) + " values");
  }
  for (double r : rho_true) {
    if (!b.contains(r)) throw ConfigError("rho_true outside [0, rho_bar]");
  }
  if (x_init.size() != dim()) throw ConfigError("x_init needs " + std::to_string(dim()) + " values");
  const ModelSpec m = model();
  check_inside("alpha_true", alpha_true, m.theta1);
  check_inside("beta_true", beta_true, m.theta2);
  if (study == Study::rvcurve && (k_max == 0 || k_max > n_obs)) {
    throw ConfigError("k_max must lie in [1, n_obs]");
  }
}

double ExperimentConfig::effective_burn_in() const {
  return std::max(burn_in, max_of(rho_true) * h_n);
}

SimConfig ExperimentConfig::sim_config(std::size_t replication) const {
  const double stride = std::pow(10.0, m_precision);
  SimConfig c;
  c.h_fine = h_n / stride;
  c.n_fine = n_obs * static_cast<std::size_t>(std::llround(stride));
  c.burn_in = effective_burn_in();
  c.seed = stream_seed(seed, replication);
  c.x_init = x_init;
  return c;
}

OptimizeOptions ExperimentConfig::optimizer() const {
  OptimizeOptions o;
  o.starts = starts;
  o.tol = tol;
  return o;
}

std::pair<std::string, std::string> split_key_value(const std::string& token) {
  const auto eq = token.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("expected key=value, got '" + token + "'");
  }
  return {trim(token.substr(0, eq)), trim(token.substr(eq + 1))};
}

std::vector<std::pair<std::string, std::string>> parse_key_values(std::istream& in) {
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    try {
      out.push_back(split_key_value(line));
    } catch (const ConfigError& e) {
      throw ConfigError("config line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

const SummaryRow& StudySummary::row(const std::string& metric) const {
  for (const auto& r : rows) {
    if (r.metric == metric) return r;
  }
  throw RangeError("no summary row '" + metric + "'");
}

std::pair<std::vector<double>, std::vector<double>> summarize(
    const std::vector<std::vector<double>>& values, const std::vector<double>& truths) {
  if (values.empty()) throw DataError("summarize: no values");
  const std::size_t k = truths.size();
  std::vector<double> mean(k, 0.0), rmse(k, 0.0);
  for (const auto& v : values) {
    if (v.size() != k) throw DataError("summarize: ragged values");
    for (std::size_t i = 0; i < k; ++i) {
      mean[i] += v[i];
      rmse[i] += (v[i] - truths[i]) * (v[i] - truths[i]);
    }
  }
  const double n = static_cast<double>(values.size());
  for (std::size_t i = 0; i < k; ++i) {
    mean[i] /= n;
    rmse[i] = std::sqrt(rmse[i] / n);
  }
  return {mean, rmse};
}

ReplicationRecord run_replication(const ExperimentConfig& cfg, std::size_t r) {
  ReplicationRecord rec;
  rec.index = r;
  const ModelSpec model = cfg.model();
  const SimConfig sim = cfg.sim_config(r);
  try {
    ConvolvedSeries series;
    if (r == 0 && !cfg.dump_path.empty()) {
      const SamplePath path = euler_maruyama(model, cfg.alpha_true, cfg.beta_true, sim);
      std::ofstream f(cfg.dump_path);
      if (!f) throw ConfigError("cannot write " + cfg.dump_path);
      write_path_csv(path, f);
      series = convolve(path, cfg.rho_true, cfg.h_n, cfg.n_obs);
    } else {
      series = simulate_convolved(model, cfg.alpha_true, cfg.beta_true, sim, cfg.rho_true,
                                  cfg.h_n, cfg.n_obs);
    }
    if (r == 0 && !cfg.series_dump_path.empty()) {
      std::ofstream f(cfg.series_dump_path);
      if (!f) throw ConfigError("cannot write " + cfg.series_dump_path);
      for (std::size_t l = 0; l < series.dim; ++l) f << (l ? "," : "") << 'x' << (l + 1);
      f << '\n';
      for (std::size_t i = 0; i < series.rows(); ++i) {
        for (std::size_t l = 0; l < series.dim; ++l) f << (l ? "," : "") << fmt_num(series.at(i, l));
        f << '\n';
      }
    }
    const SmoothingBound bound = cfg.bound();
    const RhoEstimate est = estimate_rho(series, bound);
    rec.rho_hat = est.rho_hat;
    rec.Rn = est.Rn;
    const TestReport test = smoothing_test(series, cfg.sig_levels);
    rec.t_stat = test.t_stat;
    rec.p_value = test.p_value;
    FitOptions fo;
    fo.optimizer = cfg.optimizer();
    const std::vector<double>& rho_fit = cfg.known_rho ? cfg.rho_true : est.rho_hat;
    const FitResult fit = lse_fit(series, rho_fit, model, bound, fo);
    rec.alpha_hat = fit.alpha_hat;
    rec.beta_hat = fit.beta_hat;
    if (cfg.fit_lga) {
      const FitResult lga = lga_estimate(series, model, fo);
      rec.lga_alpha = lga.alpha_hat;
      rec.lga_beta = lga.beta_hat;
    }
    rec.ok = true;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    rec.ok = false;
    rec.error = e.what();
  }
  return rec;
}

std::vector<ReplicationRecord> run_pool(std::size_t count, std::size_t threads,
                                        const std::function<ReplicationRecord(std::size_t)>& f) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, std::max<std::size_t>(count, 1));
  std::vector<ReplicationRecord> out(count);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        out[i] = f(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(count);
        return;
      }
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  std::sort(out.begin(), out.end(),
            [](const ReplicationRecord& a, const ReplicationRecord& b) { return a.index < b.index; });
  return out;
}

namespace {

void add_estimate_rows(StudySummary& s, const std::string& name,
                       const std::vector<std::vector<double>>& values,
                       const std::vector<double>& truths) {
  if (values.empty()) return;
  const auto [mean, rmse] = summarize(values, truths);
  const double n = static_cast<double>(values.size());
  for (std::size_t i = 0; i < truths.size(); ++i) {
    double ss = 0.0;
    for (const auto& v : values) ss += (v[i] - mean[i]) * (v[i] - mean[i]);
    const double se = values.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : kNaN;
    s.rows.push_back({name + "_" + std::to_string(i + 1), truths[i], mean[i], rmse[i], se,
                      values.size()});
  }
}

}  // namespace

SimStudyResult run_sim_study(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.study != Study::sim1d && cfg.study != Study::sim2d) {
    throw ConfigError("run_sim_study needs study sim1d or sim2d");
  }
  if (cfg.effective_burn_in() > cfg.burn_in) {
    warn("burn-in extended to " + fmt_num(cfg.effective_burn_in()) +
         " to cover the widest averaging window");
  }
  SimStudyResult res;
  res.records = run_pool(cfg.replications, cfg.threads,
                         [&](std::size_t r) { return run_replication(cfg, r); });

  std::vector<std::vector<double>> rho, alpha, beta, lga_a, lga_b, tstat;
  for (const auto& rec : res.records) {
    if (!rec.ok) continue;
    rho.push_back(rec.rho_hat);
    alpha.push_back(rec.alpha_hat);
    beta.push_back(rec.beta_hat);
    tstat.push_back(rec.t_stat);
    if (cfg.fit_lga) {
      lga_a.push_back(rec.lga_alpha);
      lga_b.push_back(rec.lga_beta);
    }
  }
  StudySummary& s = res.summary;
  s.replications = cfg.replications;
  s.failed = cfg.replications - rho.size();
  if (static_cast<double>(s.failed) > 0.1 * static_cast<double>(cfg.replications)) {
    std::string first;
    for (const auto& rec : res.records) {
      if (!rec.ok) {
        first = rec.error;
        break;
      }
    }
    throw DataError(std::to_string(s.failed) + " of " + std::to_string(cfg.replications) +
                    " replications failed; first error: " + first);
  }
  add_estimate_rows(s, "rho_hat", rho, cfg.rho_true);
  add_estimate_rows(s, "alpha_hat", alpha, cfg.alpha_true);
  add_estimate_rows(s, "beta_hat", beta, cfg.beta_true);
  add_estimate_rows(s, "lga_alpha", lga_a, cfg.alpha_true);
  add_estimate_rows(s, "lga_beta", lga_b, cfg.beta_true);

  const double n = static_cast<double>(tstat.size());
  for (std::size_t i = 0; i < cfg.dim() && !tstat.empty(); ++i) {
    double mean = 0.0, mx = -std::numeric_limits<double>::infinity();
    for (const auto& t : tstat) {
      mean += t[i];
      mx = std::max(mx, t[i]);
    }
    mean /= n;
    double ss = 0.0;
    for (const auto& t : tstat) ss += (t[i] - mean) * (t[i] - mean);
    const std::string axis = std::to_string(i + 1);
    s.rows.push_back({"t_stat_" + axis, kNaN, mean, kNaN,
                      tstat.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : kNaN, tstat.size()});
    s.rows.push_back({"max_t_stat_" + axis, kNaN, mx, kNaN, kNaN, tstat.size()});
    for (double level : cfg.sig_levels) {
      const double crit = gaussian_quantile(level);
      double hits = 0.0;
      for (const auto& t : tstat) hits += t[i] < crit ? 1.0 : 0.0;
      const double p = hits / n;
      s.rows.push_back({"reject_" + fmt_num(level) + "_" + axis, kNaN, p, kNaN,
                        std::sqrt(p * (1.0 - p) / n), tstat.size()});
    }
  }
  s.rows.push_back({"failed_replications", kNaN, static_cast<double>(s.failed), kNaN, kNaN,
                    cfg.replications});
  return res;
}

void write_summary_csv(const StudySummary& s, std::ostream& out) {
  auto cell = [](double v) { return std::isnan(v) ? std::string() : fmt_num(v); };
  out << "metric,truth,mean,rmse,mc_se,count\n";
  for (const auto& r : s.rows) {
    out << r.metric << ',' << cell(r.truth) << ',' << cell(r.mean) << ',' << cell(r.rmse) << ','
        << cell(r.mc_se) << ',' << r.count << '\n';
  }
}

void write_replications_csv(const ExperimentConfig& cfg,
                            const std::vector<ReplicationRecord>& records, std::ostream& out) {
  const std::size_t d = cfg.dim();
  const ModelSpec m = cfg.model();
  out << "replication,status";
  auto head = [&](const std::string& name, std::size_t k) {
    for (std::size_t i = 0; i < k; ++i) out << ',' << name << '_' << (i + 1);
  };
  head("rho_hat", d);
  head("Rn", d);
  head("t_stat", d);
  head("p_value", d);
  head("alpha_hat", m.alpha_dim());
  head("beta_hat", m.beta_dim());
  if (cfg.fit_lga) {
    head("lga_alpha", m.alpha_dim());
    head("lga_beta", m.beta_dim());
  }
  out << ",error\n";
  auto cells = [&](const std::vector<double>& v, std::size_t k) {
    for (std::size_t i = 0; i < k; ++i) out << ',' << (i < v.size() ? fmt_num(v[i]) : "");
  };
  for (const auto& r : records) {
    out << r.index << ',' << (r.ok ? "ok" : "failed");
    cells(r.rho_hat, d);
    cells(r.Rn, d);
    cells(r.t_stat, d);
    cells(r.p_value, d);
    cells(r.alpha_hat, m.alpha_dim());
    cells(r.beta_hat, m.beta_dim());
    if (cfg.fit_lga) {
      cells(r.lga_alpha, m.alpha_dim());
      cells(r.lga_beta, m.beta_dim());
    }
    std::string err = r.error;
    std::replace(err.begin(), err.end(), ',', ';');
    std::replace(err.begin(), err.end(), '\n', ' ');
    out << ',' << err << '\n';
  }
}

NumericTable read_numeric_table(std::istream& in) {
  NumericTable t;
  std::string line;
  std::size_t lineno = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string s = trim(line);
    if (s.empty() || s[0] == '#') continue;
    const auto fields = split_fields(s);
    std::vector<double> row;
    bool all_ok = true;
    std::size_t bad = 0;
    for (std::size_t c = 0; c < fields.size(); ++c) {
      bool ok = false;
      row.push_back(parse_cell(fields[c], ok));
      if (!ok && all_ok) {
        all_ok = false;
        bad = c;
      }
    }
    if (first) {
      first = false;
      t.columns.resize(fields.size());
      if (!all_ok) {
        t.header = fields;
        continue;
      }
    }
    if (!all_ok) {
      throw DataError("line " + std::to_string(lineno) + ", column " + std::to_string(bad + 1) +
                      ": not a finite number: '" + fields[bad] + "'");
    }
    if (row.size() != t.columns.size()) {
      throw DataError("line " + std::to_string(lineno) + ": expected " +
                      std::to_string(t.columns.size()) + " fields, got " +
                      std::to_string(row.size()));
    }
    for (std::size_t c = 0; c < row.size(); ++c) t.columns[c].push_back(row[c]);
  }
  if (t.columns.empty() || t.columns[0].empty()) throw DataError("no numeric rows in input");
  return t;
}

ConvolvedSeries series_from_columns(const NumericTable& table,
                                    const std::vector<std::size_t>& columns, double h_n) {
  ConvolvedSeries s;
  s.h_n = h_n;
  s.dim = columns.size();
  s.rho.assign(s.dim, kNaN);
  s.window.assign(s.dim, 0);
  for (std::size_t c : columns) {
    if (c == 0 || c > table.columns.size()) {
      throw DataError("column " + std::to_string(c) + " does not exist; the file has " +
                      std::to_string(table.columns.size()));
    }
  }
  const std::size_t rows = table.columns[0].size();
  s.values.reserve(rows * s.dim);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t c : columns) s.values.push_back(table.columns[c - 1][i]);
  }
  return s;
}

RealDataReport run_real_data(const ExperimentConfig& cfg) {
  cfg.validate();
  std::ifstream f(cfg.input_path);
  if (!f) throw DataError("cannot open " + cfg.input_path);
  const NumericTable table = read_numeric_table(f);
  RealDataReport rep;
  rep.h_n = 1.0 / (cfg.sample_rate_hz * cfg.time_unit_s);
  rep.n = table.columns[0].size() - 1;
  rep.sig_levels = cfg.sig_levels;
  const SmoothingBound bound = cfg.bound();
  for (std::size_t c = 1; c <= table.columns.size(); ++c) {
    const ConvolvedSeries s = series_from_columns(table, {c}, rep.h_n);
    ColumnReport cr;
    cr.column = c;
    cr.name = c <= table.header.size() ? table.header[c - 1] : "col" + std::to_string(c);
    try {
      const RhoEstimate est = estimate_rho(s, bound);
      const TestReport test = smoothing_test(s, cfg.sig_levels);
      cr.rho_hat = est.rho_hat[0];
      cr.Rn = est.Rn[0];
      cr.t_stat = test.t_stat[0];
      cr.p_value = test.p_value[0];
      for (const auto& lv : test.reject_at) cr.reject.push_back(lv.second[0]);
    } catch (const DataError& e) {
      throw DataError("column " + std::to_string(c) + " (" + cr.name + "): " + e.what());
    }
    rep.columns.push_back(cr);
  }
  const ModelSpec model = realdata_model();
  FitOptions fo;
  fo.optimizer = cfg.optimizer();
  for (std::size_t c : cfg.fit_columns) {
    const ConvolvedSeries s = series_from_columns(table, {c}, rep.h_n);
    ColumnFit fit;
    fit.column = c;
    fit.rho_hat = rep.columns.at(c - 1).rho_hat;
    const std::vector<double> rho{fit.rho_hat};
    fit.lse = lse_fit(s, rho, model, bound, fo);
    fit.lga = lga_estimate(s, model, fo);
    rep.fits.push_back(fit);
  }
  return rep;
}

std::string format_ou_equation(const FitResult& fit) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "dX_t = ((%.3f) X_t + (%.3f)) dt + (%.3f) dw_t", fit.beta_hat[0],
                fit.beta_hat[1], fit.alpha_hat[0]);
  return buf;
}

void write_real_data_report(const RealDataReport& r, std::ostream& table_csv,
                            std::ostream& fits_csv) {
  table_csv << "column,name,rho_hat,Rn,t_stat,p_value";
  for (double lv : r.sig_levels) table_csv << ",reject_" << fmt_num(lv);
  table_csv << '\n';
  for (const auto& c : r.columns) {
    table_csv << c.column << ',' << c.name << ',' << fmt_num(c.rho_hat) << ',' << fmt_num(c.Rn)
              << ',' << fmt_num(c.t_stat) << ',' << fmt_num(c.p_value);
    for (bool b : c.reject) table_csv << ',' << (b ? 1 : 0);
    table_csv << '\n';
  }
  fits_csv << "column,method,rho,alpha,beta_1,beta_2\n";
  for (const auto& f : r.fits) {
    for (const auto& [name, fit, rho] : {std::tuple{"lga", f.lga, 0.0},
                                         std::tuple{"lse", f.lse, f.rho_hat}}) {
      fits_csv << f.column << ',' << name << ',' << fmt_num(rho) << ','
               << fmt_num(fit.alpha_hat[0]) << ',' << fmt_num(fit.beta_hat[0]) << ','
               << fmt_num(fit.beta_hat[1]) << '\n';
    }
  }
}

std::vector<std::pair<std::size_t, double>> run_rv_curve(const ExperimentConfig& cfg) {
  cfg.validate();
  if (!cfg.input_path.empty()) {
    std::ifstream f(cfg.input_path);
    if (!f) throw DataError("cannot open " + cfg.input_path);
    const NumericTable table = read_numeric_table(f);
    const ConvolvedSeries s = series_from_columns(
        table, {cfg.fit_columns.at(0)}, 1.0 / (cfg.sample_rate_hz * cfg.time_unit_s));
    return rv_curve(s, 0, cfg.k_max);
  }
  const ModelSpec model = cfg.model();
  const ConvolvedSeries s = simulate_convolved(model, cfg.alpha_true, cfg.beta_true,
                                               cfg.sim_config(0), cfg.rho_true, cfg.h_n,
                                               cfg.n_obs);
  return rv_curve(s, 0, cfg.k_max);
}

LineFit least_squares_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 3) throw DataError("line fit needs >= 3 paired points");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw DataError("line fit needs distinct x values");
  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ssr = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - fit.intercept - fit.slope * x[i];
    ssr += r * r;
  }
  fit.slope_se = std::sqrt(ssr / (n - 2.0) / sxx);
  return fit;
}

std::pair<double, double> ks_test_normal(std::vector<double> sample) {
  if (sample.empty()) throw DataError("KS test needs a nonempty sample");
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double D = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double F = gaussian_cdf(sample[i]);
    D = std::max({D, static_cast<double>(i + 1) / n - F, F - static_cast<double>(i) / n});
  }
  // Asymptotic Kolmogorov tail with Stephens' small-sample correction.
  const double lambda = (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n)) * D;
  double p = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    p += (k % 2 == 1 ? 2.0 : -2.0) * term;
    if (term < 1e-18) break;
  }
  return {D, std::clamp(p, 0.0, 1.0)};
}

std::string run_and_write(const ExperimentConfig& cfg) {
  namespace fs = std::filesystem;
  std::ostringstream report;
  auto open = [&](const std::string& name) {
    fs::create_directories(cfg.output_dir);
    const fs::path p = fs::path(cfg.output_dir) / name;
    std::ofstream f(p);
    if (!f) throw ConfigError("cannot write " + p.string());
    report << "wrote " << p.string() << '\n';
    return f;
  };
  switch (cfg.study) {
    case Study::sim1d:
    case Study::sim2d: {
      const SimStudyResult res = run_sim_study(cfg);
      {
        auto f = open("summary.csv");
        write_summary_csv(res.summary, f);
      }
      {
        auto f = open("replications.csv");
        write_replications_csv(cfg, res.records, f);
      }
      for (const auto& r : res.summary.rows) {
        report << r.metric << ": mean " << fmt_num(r.mean);
        if (!std::isnan(r.rmse)) report << ", rmse " << fmt_num(r.rmse);
        report << '\n';
      }
      break;
    }
    case Study::realdata: {
      const RealDataReport rep = run_real_data(cfg);
      {
        auto t = open("realdata_table.csv");
        auto fits = open("realdata_fits.csv");
        write_real_data_report(rep, t, fits);
      }
      report << "n = " << rep.n << ", h_n = " << fmt_num(rep.h_n) << '\n';
      for (const auto& c : rep.columns) {
        report << c.name << ": rho_hat " << fmt_num(c.rho_hat) << ", T " << fmt_num(c.t_stat)
               << ", p " << fmt_num(c.p_value) << '\n';
      }
      for (const auto& f : rep.fits) {
        report << "column " << f.column << " LGA: " << format_ou_equation(f.lga) << '\n';
        report << "column " << f.column << " LSE: " << format_ou_equation(f.lse) << '\n';
      }
      break;
    }
    case Study::rvcurve: {
      const auto curve = run_rv_curve(cfg);
      {
        auto f = open("rv_curve.csv");
        f << "k,rv\n";
        for (const auto& [k, rv] : curve) f << k << ',' << fmt_num(rv) << '\n';
      }
      std::vector<double> x, y;
      for (const auto& [k, rv] : curve) {
        x.push_back(static_cast<double>(k));
        y.push_back(rv);
      }
      if (x.size() >= 3) {
        const LineFit lf = least_squares_line(x, y);
        report << "slope of RV(k) on k: " << fmt_num(lf.slope) << " (se " << fmt_num(lf.slope_se)
               << ")\n";
      }
      break;
    }
  }
  return report.str();
}

}  // namespace convdiff

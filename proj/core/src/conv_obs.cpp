#include "convdiff/conv_obs.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <limits>
#include <mutex>
#include <sstream>

#include "convdiff/errors.hpp"
#include "convdiff/format.hpp"

namespace convdiff {

namespace {

std::mutex g_sink_mutex;
std::function<void(const std::string&)> g_sink = [](const std::string& m) {
  std::cerr << "warning: " << m << '\n';
};

struct Layout {
  std::size_t stride;
  std::vector<std::size_t> window;
};

Layout make_layout(std::span<const double> rho, double h_n, double h, std::size_t dim) {
  if (rho.size() != dim) {
    throw ConfigError("rho has " + std::to_string(rho.size()) + " entries, path has " +
                      std::to_string(dim) + " axes");
  }
  Layout lay{grid_stride(h_n, h), {}};
  for (double r : rho) lay.window.push_back(window_length(r, h_n, h));
  return lay;
}

void check_window_fits(const Layout& lay, std::size_t zero_index) {
  for (std::size_t l = 0; l < lay.window.size(); ++l) {
    if (lay.window[l] > zero_index + 1) {
      throw RangeError("averaging window of axis " + std::to_string(l + 1) + " needs " +
                       std::to_string(lay.window[l]) + " samples but only " +
                       std::to_string(zero_index + 1) + " exist up to time 0");
    }
  }
}

ConvolvedSeries empty_series(std::span<const double> rho, double h_n, const Layout& lay,
                             std::size_t dim, std::size_t n_obs) {
  ConvolvedSeries s;
  s.h_n = h_n;
  s.rho.assign(rho.begin(), rho.end());
  s.window = lay.window;
  s.dim = dim;
  s.values.reserve((n_obs + 1) * dim);
  return s;
}

double parse_double(const std::string& field, std::size_t line, std::size_t column) {
  const char* begin = field.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  while (end && (*end == ' ' || *end == '\t' || *end == '\r')) ++end;
  if (end == begin || (end && *end != '\0') || !std::isfinite(v)) {
    throw DataError("line " + std::to_string(line) + ", column " + std::to_string(column) +
                    ": not a finite number: '" + field + "'");
  }
  return v;
}

}  // namespace

std::vector<double> ConvolvedSeries::axis_values(std::size_t axis) const {
  std::vector<double> out(rows());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = at(i, axis);
  return out;
}

void set_warning_sink(std::function<void(const std::string&)> sink) {
  std::lock_guard lock(g_sink_mutex);
  g_sink = std::move(sink);
}

void warn(const std::string& message) {
  std::lock_guard lock(g_sink_mutex);
  if (g_sink) g_sink(message);
}

std::size_t grid_stride(double h_n, double h) {
  if (!(h_n > 0.0) || !(h > 0.0)) throw ConfigError("sampling steps must be positive");
  const double ratio = h_n / h;
  const double k = std::round(ratio);
  if (k < 1.0 || std::abs(ratio - k) > 1e-9 * k) {
    throw ConfigError("h_n = " + fmt_num(h_n) + " is not an integer multiple of the fine step " +
                      fmt_num(h));
  }
  return static_cast<std::size_t>(k);
}

std::size_t window_length(double rho, double h_n, double h) {
  if (!(rho >= 0.0) || !std::isfinite(rho)) throw DomainError("rho must be finite and >= 0");
  if (rho == 0.0) return 0;
  const double k = std::round(rho * static_cast<double>(grid_stride(h_n, h)));
  if (k < 1.0) {
    warn("rho = " + fmt_num(rho) + " is below the fine-grid resolution; observing directly");
    return 0;
  }
  return static_cast<std::size_t>(k);
}

ConvolvedSeries convolve(const SamplePath& path, std::span<const double> rho, double h_n,
                         std::size_t n_obs) {
  const Layout lay = make_layout(rho, h_n, path.h, path.dim);
  if (path.size() <= path.zero_index) throw RangeError("path ends before time 0");
  const std::size_t available = (path.size() - 1 - path.zero_index) / lay.stride;
  if (n_obs == 0) n_obs = available;
  if (n_obs > available) {
    throw RangeError("requested " + std::to_string(n_obs) + " observations, path covers " +
                     std::to_string(available));
  }
  check_window_fits(lay, path.zero_index);

  ConvolvedSeries s = empty_series(rho, h_n, lay, path.dim, n_obs);
  for (std::size_t i = 0; i <= n_obs; ++i) {
    const std::size_t t = path.zero_index + i * lay.stride;
    for (std::size_t l = 0; l < path.dim; ++l) {
      const std::size_t K = lay.window[l];
      if (K == 0) {
        s.values.push_back(path.at(t, l));
        continue;
      }
      double sum = 0.0;
      for (std::size_t j = 0; j < K; ++j) sum += path.at(t - j, l);
      s.values.push_back(sum / static_cast<double>(K));
    }
  }
  return s;
}

ConvolvedSeries simulate_convolved(const ModelSpec& model, std::span<const double> alpha,
                                   std::span<const double> beta, const SimConfig& cfg,
                                   std::span<const double> rho, double h_n, std::size_t n_obs) {
  const std::size_t d = model.dim_d;
  const Layout lay = make_layout(rho, h_n, cfg.h_fine, d);
  const std::size_t zero = cfg.burn_steps();
  if (n_obs == 0 || n_obs * lay.stride > cfg.n_fine) {
    throw RangeError("n_obs * h_n must be positive and within the simulated horizon");
  }
  check_window_fits(lay, zero);

  EulerStepper stepper(model, alpha, beta, cfg);
  const std::size_t ring = std::max<std::size_t>(
      1, *std::max_element(lay.window.begin(), lay.window.end()));
  std::vector<double> buf(ring * d);
  auto store = [&] {
    const auto x = stepper.state();
    std::copy(x.begin(), x.end(), buf.begin() + (stepper.index() % ring) * d);
  };

  ConvolvedSeries s = empty_series(rho, h_n, lay, d, n_obs);
  const std::size_t last = zero + n_obs * lay.stride;
  store();
  for (std::size_t t = 0;; ) {
    if (t >= zero && (t - zero) % lay.stride == 0) {
      for (std::size_t l = 0; l < d; ++l) {
        const std::size_t K = lay.window[l];
        if (K == 0) {
          s.values.push_back(buf[(t % ring) * d + l]);
          continue;
        }
        double sum = 0.0;
        for (std::size_t j = 0; j < K; ++j) sum += buf[((t - j) % ring) * d + l];
        s.values.push_back(sum / static_cast<double>(K));
      }
    }
    if (t == last) break;
    stepper.advance();
    t = stepper.index();
    store();
  }
  return s;
}

ConvolvedSeries subsample(const ConvolvedSeries& series, std::size_t k) {
  if (k == 0) throw RangeError("subsample step must be >= 1");
  if (k > series.n()) {
    throw RangeError("subsample step " + std::to_string(k) + " exceeds n = " +
                     std::to_string(series.n()));
  }
  ConvolvedSeries out;
  out.h_n = series.h_n * static_cast<double>(k);
  out.dim = series.dim;
  out.window = series.window;
  // The window is fixed in time, so in units of the new step it shrinks by k.
  for (double r : series.rho) out.rho.push_back(r / static_cast<double>(k));
  for (std::size_t i = 0; i < series.rows(); i += k) {
    const auto r = series.row(i);
    out.values.insert(out.values.end(), r.begin(), r.end());
  }
  return out;
}

void write_series_csv(const ConvolvedSeries& series, std::ostream& out) {
  out << 't';
  for (std::size_t l = 0; l < series.dim; ++l) out << ",x" << (l + 1);
  out << '\n';
  for (std::size_t i = 0; i < series.rows(); ++i) {
    out << fmt_num(static_cast<double>(i) * series.h_n);
    for (std::size_t l = 0; l < series.dim; ++l) out << ',' << fmt_num(series.at(i, l));
    out << '\n';
  }
}

ConvolvedSeries read_series_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty series file");
  std::size_t dim = 0;
  {
    std::stringstream hs(line);
    std::string cell;
    std::getline(hs, cell, ',');
    if (cell != "t") throw DataError("line 1: expected header starting with 't'");
    while (std::getline(hs, cell, ',')) ++dim;
  }
  if (dim == 0) throw DataError("line 1: no value columns");

  ConvolvedSeries s;
  s.dim = dim;
  std::vector<double> times;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    std::stringstream ls(line);
    std::string cell;
    std::size_t col = 0;
    while (std::getline(ls, cell, ',')) {
      ++col;
      const double v = parse_double(cell, lineno, col);
      if (col == 1) {
        times.push_back(v);
      } else if (col <= dim + 1) {
        s.values.push_back(v);
      }
    }
    if (col != dim + 1) {
      throw DataError("line " + std::to_string(lineno) + ": expected " +
                      std::to_string(dim + 1) + " fields, got " + std::to_string(col));
    }
  }
  if (times.size() < 2) throw DataError("series needs at least two rows");
  s.h_n = times[1] - times[0];
  if (!(s.h_n > 0.0)) throw DataError("time column must be increasing");
  s.rho.assign(dim, std::numeric_limits<double>::quiet_NaN());
  s.window.assign(dim, 0);
  return s;
}

}  // namespace convdiff

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "convdiff/errors.hpp"
#include "convdiff/inference.hpp"

namespace convdiff {

namespace {

constexpr unsigned kPrimes[] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29, 31, 37, 41,
                                43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97};

double radical_inverse(std::size_t index, unsigned base) {
  double inv = 1.0 / base;
  double f = inv;
  double r = 0.0;
  while (index > 0) {
    r += f * static_cast<double>(index % base);
    index /= base;
    f *= inv;
  }
  return r;
}

struct Vertex {
  std::vector<double> x;
  double g;  // minimized: -objective, +inf when rejected
};

class NelderMead {
 public:
  NelderMead(const Objective& f, const ParamBox& box, const OptimizeOptions& opts)
      : f_(f), box_(box), opts_(opts), k_(box.size()) {
    const double n = static_cast<double>(k_);
    // Dimension-adapted coefficients (Gao and Han).
    expand_ = 1.0 + 2.0 / n;
    contract_ = 0.75 - 1.0 / (2.0 * n);
    shrink_ = 1.0 - 1.0 / n;
    if (k_ == 1) {
      expand_ = 2.0;
      contract_ = 0.5;
      shrink_ = 0.5;
    }
  }

  double eval(const std::vector<double>& x) {
    ++evals_;
    const double v = f_(x);
    return std::isfinite(v) ? -v : std::numeric_limits<double>::infinity();
  }

  std::vector<double> clip(std::vector<double> x) const {
    for (std::size_t i = 0; i < k_; ++i) x[i] = std::clamp(x[i], box_.low[i], box_.high[i]);
    return x;
  }

  // One Nelder-Mead run from x0; returns the best vertex.
  Vertex run(const std::vector<double>& x0, bool& converged) {
    std::vector<Vertex> s;
    s.push_back({x0, eval(x0)});
    for (std::size_t i = 0; i < k_; ++i) {
      std::vector<double> x = x0;
      const double width = box_.high[i] - box_.low[i];
      double step = 0.1 * width;
      if (x[i] + step > box_.high[i]) step = -step;
      x[i] += step;
      x = clip(std::move(x));
      s.push_back({x, eval(x)});
    }
    const std::size_t budget = evals_ + opts_.max_evals;
    converged = false;
    std::vector<double> c(k_);
    while (evals_ < budget) {
      std::sort(s.begin(), s.end(), [](const Vertex& a, const Vertex& b) { return a.g < b.g; });
      double diam = 0.0;
      for (std::size_t v = 1; v <= k_; ++v) {
        for (std::size_t i = 0; i < k_; ++i) diam = std::max(diam, std::abs(s[v].x[i] - s[0].x[i]));
      }
      if (diam < opts_.tol) {
        converged = true;
        break;
      }
      std::fill(c.begin(), c.end(), 0.0);
      for (std::size_t v = 0; v < k_; ++v) {
        for (std::size_t i = 0; i < k_; ++i) c[i] += s[v].x[i];
      }
      for (double& ci : c) ci /= static_cast<double>(k_);
      Vertex& worst = s[k_];
      auto along = [&](double t) {
        std::vector<double> x(k_);
        for (std::size_t i = 0; i < k_; ++i) x[i] = c[i] + t * (c[i] - worst.x[i]);
        return clip(std::move(x));
      };
      std::vector<double> xr = along(1.0);
      const double gr = eval(xr);
      if (gr < s[0].g) {
        std::vector<double> xe = along(expand_);
        const double ge = eval(xe);
        if (ge < gr) {
          worst = {std::move(xe), ge};
        } else {
          worst = {std::move(xr), gr};
        }
        continue;
      }
      if (gr < s[k_ - 1].g) {
        worst = {std::move(xr), gr};
        continue;
      }
      if (gr < worst.g) {
        std::vector<double> xc = along(contract_);
        const double gc = eval(xc);
        if (gc <= gr) {
          worst = {std::move(xc), gc};
          continue;
        }
      } else {
        std::vector<double> xc = along(-contract_);
        const double gc = eval(xc);
        if (gc < worst.g) {
          worst = {std::move(xc), gc};
          continue;
        }
      }
      for (std::size_t v = 1; v <= k_; ++v) {
        for (std::size_t i = 0; i < k_; ++i) {
          s[v].x[i] = s[0].x[i] + shrink_ * (s[v].x[i] - s[0].x[i]);
        }
        s[v].g = eval(s[v].x);
      }
    }
    return *std::min_element(s.begin(), s.end(),
                             [](const Vertex& a, const Vertex& b) { return a.g < b.g; });
  }

  std::size_t evals() const noexcept { return evals_; }

 private:
  const Objective& f_;
  const ParamBox& box_;
  OptimizeOptions opts_;
  std::size_t k_;
  double expand_, contract_, shrink_;
  std::size_t evals_ = 0;
};

}  // namespace

OptimizeResult bounded_optimize(const Objective& objective, const ParamBox& box,
                                const OptimizeOptions& opts) {
  const std::size_t k = box.size();
  if (k == 0) throw ConfigError("bounded_optimize: empty parameter box");
  if (k > std::size(kPrimes)) throw ConfigError("bounded_optimize: too many dimensions");
  if (opts.starts == 0) throw ConfigError("bounded_optimize: need at least one start");

  NelderMead nm(objective, box, opts);
  Vertex best{{}, std::numeric_limits<double>::infinity()};
  bool best_converged = false;
  for (std::size_t s = 0; s < opts.starts; ++s) {
    std::vector<double> x0(k);
    for (std::size_t i = 0; i < k; ++i) {
      x0[i] = box.low[i] + radical_inverse(s + 1, kPrimes[i]) * (box.high[i] - box.low[i]);
    }
    bool conv = false;
    Vertex v = nm.run(x0, conv);
    if (std::isfinite(v.g)) {
      // A restart from the end point guards against a collapsed simplex.
      bool conv2 = false;
      Vertex w = nm.run(v.x, conv2);
      if (w.g <= v.g) {
        v = std::move(w);
        conv = conv2;
      }
    }
    if (v.g < best.g) {
      best = std::move(v);
      best_converged = conv;
    }
  }
  if (!std::isfinite(best.g)) {
    throw OptimizerError("bounded_optimize: objective was non-finite at every start");
  }

  OptimizeResult r;
  r.argmax = best.x;
  r.value = -best.g;
  r.iters = nm.evals();
  r.converged = best_converged;
  r.at_boundary.resize(k);
  for (std::size_t i = 0; i < k; ++i) {
    const double slack = 1e-7 * std::max(1.0, box.high[i] - box.low[i]);
    r.at_boundary[i] = box.high[i] > box.low[i] &&
                       (r.argmax[i] - box.low[i] <= slack || box.high[i] - r.argmax[i] <= slack);
  }
  return r;
}

}  // namespace convdiff

#include "convdiff/sde_sim.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "convdiff/errors.hpp"
#include "convdiff/format.hpp"

namespace convdiff {

ParamBox::ParamBox(std::vector<double> lo, std::vector<double> hi)
    : low(std::move(lo)), high(std::move(hi)) {
  if (low.size() != high.size()) throw ConfigError("ParamBox: low/high size mismatch");
  for (std::size_t k = 0; k < low.size(); ++k) {
    if (!(low[k] <= high[k]) || !std::isfinite(low[k]) || !std::isfinite(high[k])) {
      throw ConfigError("ParamBox: empty or non-finite interval at coordinate " +
                        std::to_string(k));
    }
  }
}

bool ParamBox::contains(std::span<const double> x) const noexcept {
  if (x.size() != low.size()) return false;
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (!(x[k] >= low[k] && x[k] <= high[k])) return false;
  }
  return true;
}

std::vector<double> ParamBox::clip(std::span<const double> x) const {
  std::vector<double> out(x.begin(), x.end());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = std::clamp(out[k], low[k], high[k]);
  return out;
}

std::vector<double> ParamBox::center() const {
  std::vector<double> c(low.size());
  for (std::size_t k = 0; k < c.size(); ++k) c[k] = 0.5 * (low[k] + high[k]);
  return c;
}

void ModelSpec::validate() const {
  if (dim_d == 0 || dim_r == 0) throw ConfigError(name + ": dimensions must be positive");
  if (!drift || !diffusion) throw ConfigError(name + ": drift and diffusion must be set");
  if (theta1.low.size() != theta1.high.size() || theta2.low.size() != theta2.high.size()) {
    throw ConfigError(name + ": malformed parameter box");
  }
  if (symmetric_root_diffusion && (dim_d != dim_r || theta1.size() != dim_d * (dim_d + 1) / 2)) {
    throw ConfigError(name + ": symmetric root diffusion needs d == r and d(d+1)/2 parameters");
  }
}

std::vector<double> ModelSpec::eval_drift(std::span<const double> x,
                                          std::span<const double> beta) const {
  std::vector<double> out(dim_d);
  drift(x, beta, out);
  return out;
}

std::vector<double> ModelSpec::eval_diffusion(std::span<const double> x,
                                              std::span<const double> alpha) const {
  std::vector<double> out(dim_d * dim_r);
  diffusion(x, alpha, out);
  return out;
}

std::vector<double> ModelSpec::eval_covariance(std::span<const double> x,
                                               std::span<const double> alpha) const {
  const std::vector<double> a = eval_diffusion(x, alpha);
  std::vector<double> cov(dim_d * dim_d, 0.0);
  for (std::size_t i = 0; i < dim_d; ++i) {
    for (std::size_t j = 0; j < dim_d; ++j) {
      double s = 0.0;
      for (std::size_t r = 0; r < dim_r; ++r) s += a[i * dim_r + r] * a[j * dim_r + r];
      cov[i * dim_d + j] = s;
    }
  }
  return cov;
}

ModelSpec ou_1d(ParamBox theta1, ParamBox theta2) {
  ModelSpec m;
  m.name = "ou1d";
  m.dim_d = 1;
  m.dim_r = 1;
  m.drift = [](std::span<const double> x, std::span<const double> b, std::span<double> out) {
    out[0] = b[0] * x[0] + b[1];
  };
  m.diffusion = [](std::span<const double>, std::span<const double> a, std::span<double> out) {
    out[0] = a[0];
  };
  m.drift_design = [](std::span<const double> x, std::span<double> out) {
    out[0] = x[0];
    out[1] = 1.0;
  };
  m.theta1 = std::move(theta1);
  m.theta2 = std::move(theta2);
  m.constant_diffusion = true;
  m.symmetric_root_diffusion = true;
  return m;
}

ModelSpec ou_1d() { return ou_1d(ParamBox({0.01}, {10.0}), ParamBox({-10.0, -10.0}, {-0.01, 10.0})); }

ModelSpec ou_2d() {
  ModelSpec m;
  m.name = "ou2d";
  m.dim_d = 2;
  m.dim_r = 2;
  m.drift = [](std::span<const double> x, std::span<const double> b, std::span<double> out) {
    out[0] = b[0] * x[0] + b[1] * x[1] + b[2];
    out[1] = b[3] * x[0] + b[4] * x[1] + b[5];
  };
  m.diffusion = [](std::span<const double>, std::span<const double> a, std::span<double> out) {
    out[0] = a[0];
    out[1] = a[1];
    out[2] = a[1];
    out[3] = a[2];
  };
  m.drift_design = [](std::span<const double> x, std::span<double> out) {
    std::fill(out.begin(), out.end(), 0.0);
    out[0] = x[0];
    out[1] = x[1];
    out[2] = 1.0;
    out[6 + 3] = x[0];
    out[6 + 4] = x[1];
    out[6 + 5] = 1.0;
  };
  const double eps = 1e-8;
  m.theta1 = ParamBox({1.0 + eps, -1.0 + eps, 1.0 + eps}, {10.0, 1.0 - eps, 10.0});
  m.theta2 = ParamBox(std::vector<double>(6, -10.0), std::vector<double>(6, 10.0));
  m.constant_diffusion = true;
  m.symmetric_root_diffusion = true;
  return m;
}

std::size_t SimConfig::burn_steps() const {
  return static_cast<std::size_t>(std::llround(burn_in / h_fine));
}

void SimConfig::validate(std::size_t dim) const {
  if (!(h_fine > 0.0) || !std::isfinite(h_fine)) throw ConfigError("h_fine must be positive");
  if (!(burn_in >= 0.0) || !std::isfinite(burn_in)) throw ConfigError("burn_in must be >= 0");
  if (n_fine == 0) throw ConfigError("n_fine must be positive");
  if (x_init.size() != dim) {
    throw ConfigError("x_init has " + std::to_string(x_init.size()) + " entries, model has " +
                      std::to_string(dim));
  }
}

namespace {

std::uint64_t splitmix64(std::uint64_t& state) noexcept {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept { return (x << k) | (x >> (64 - k)); }

}  // namespace

Xoshiro256::Xoshiro256(std::uint64_t seed) {
  std::uint64_t sm = seed;
  for (auto& s : s_) s = splitmix64(sm);
}

std::uint64_t Xoshiro256::next() noexcept {
  const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double Xoshiro256::uniform() noexcept {
  return (static_cast<double>(static_cast<std::int64_t>(next() >> 11)) + 0.5) * 0x1.0p-53;
}

namespace {

// Ziggurat tables for 128 layers (Doornik's ZIGNOR layout).
struct ZigguratTables {
  static constexpr int kLayers = 128;
  static constexpr double kR = 3.442619855899;
  static constexpr double kV = 9.91256303526217e-3;
  double x[kLayers + 1];
  double ratio[kLayers];

  ZigguratTables() {
    double f = std::exp(-0.5 * kR * kR);
    x[0] = kV / f;
    x[1] = kR;
    x[kLayers] = 0.0;
    for (int i = 2; i < kLayers; ++i) {
      x[i] = std::sqrt(-2.0 * std::log(kV / x[i - 1] + f));
      f = std::exp(-0.5 * x[i] * x[i]);
    }
    for (int i = 0; i < kLayers; ++i) ratio[i] = x[i + 1] / x[i];
  }
};

const ZigguratTables kZig;

}  // namespace

double NormalGenerator::operator()() noexcept {
  const ZigguratTables& t = kZig;
  for (;;) {
    const std::uint64_t bits = rng_.next();
    // Top 53 bits give u in (-1, 1); the low 7 bits pick the layer.
    const double u = 2.0 * ((static_cast<double>(static_cast<std::int64_t>(bits >> 11)) + 0.5) * 0x1.0p-53) - 1.0;
    const int i = static_cast<int>(bits & 0x7F);
    if (std::abs(u) < t.ratio[i]) return u * t.x[i];
    if (i == 0) {
      double xt, yt;
      do {
        xt = std::log(rng_.uniform()) / ZigguratTables::kR;
        yt = std::log(rng_.uniform());
      } while (-2.0 * yt < xt * xt);
      return u < 0.0 ? xt - ZigguratTables::kR : ZigguratTables::kR - xt;
    }
    const double x = u * t.x[i];
    const double f0 = std::exp(-0.5 * (t.x[i] * t.x[i] - x * x));
    const double f1 = std::exp(-0.5 * (t.x[i + 1] * t.x[i + 1] - x * x));
    if (f1 + rng_.uniform() * (f0 - f1) < 1.0) return x;
  }
}

EulerStepper::EulerStepper(const ModelSpec& model, std::span<const double> alpha,
                           std::span<const double> beta, const SimConfig& cfg)
    : model_(model),
      alpha_(alpha.begin(), alpha.end()),
      beta_(beta.begin(), beta.end()),
      h_(cfg.h_fine),
      sqrt_h_(std::sqrt(cfg.h_fine)),
      normal_(cfg.seed),
      x_(cfg.x_init),
      drift_(model.dim_d),
      diff_(model.dim_d * model.dim_r),
      z_(model.dim_r) {
  model.validate();
  cfg.validate(model.dim_d);
  if (alpha_.size() != model.alpha_dim() || beta_.size() != model.beta_dim()) {
    throw ConfigError(model.name + ": parameter vector sizes do not match the boxes");
  }
  total_ = cfg.burn_steps() + cfg.n_fine;
  if (model_.constant_diffusion) model_.diffusion(x_, alpha_, diff_);
  for (double x : x_) {
    if (!std::isfinite(x)) throw SimulationError("non-finite initial state", 0);
  }
}

void EulerStepper::advance() {
  const std::size_t d = model_.dim_d;
  const std::size_t r = model_.dim_r;
  model_.drift(x_, beta_, drift_);
  if (!model_.constant_diffusion) model_.diffusion(x_, alpha_, diff_);
  for (std::size_t l = 0; l < d; ++l) {
    if (!std::isfinite(drift_[l])) throw SimulationError("non-finite drift", index_);
  }
  for (double v : diff_) {
    if (!std::isfinite(v)) throw SimulationError("non-finite diffusion", index_);
  }
  for (std::size_t k = 0; k < r; ++k) z_[k] = normal_();
  for (std::size_t l = 0; l < d; ++l) {
    double noise = 0.0;
    for (std::size_t k = 0; k < r; ++k) noise += diff_[l * r + k] * z_[k];
    x_[l] = x_[l] + drift_[l] * h_ + sqrt_h_ * noise;
    if (!std::isfinite(x_[l])) throw SimulationError("state diverged", index_);
  }
  ++index_;
}

SamplePath euler_maruyama(const ModelSpec& model, std::span<const double> alpha,
                          std::span<const double> beta, const SimConfig& cfg) {
  EulerStepper stepper(model, alpha, beta, cfg);
  SamplePath path;
  path.h = cfg.h_fine;
  path.dim = model.dim_d;
  path.zero_index = cfg.burn_steps();
  path.origin_time = -static_cast<double>(path.zero_index) * cfg.h_fine;
  path.values.reserve((stepper.total_steps() + 1) * model.dim_d);
  auto push = [&] {
    const auto s = stepper.state();
    path.values.insert(path.values.end(), s.begin(), s.end());
  };
  push();
  while (stepper.index() < stepper.total_steps()) {
    stepper.advance();
    push();
  }
  return path;
}

void write_path_csv(const SamplePath& path, std::ostream& out) {
  out << "time";
  for (std::size_t l = 0; l < path.dim; ++l) out << ",value_" << (l + 1);
  out << '\n';
  for (std::size_t k = 0; k < path.size(); ++k) {
    out << fmt_num(path.time(k));
    for (std::size_t l = 0; l < path.dim; ++l) out << ',' << fmt_num(path.at(k, l));
    out << '\n';
  }
}

}  // namespace convdiff

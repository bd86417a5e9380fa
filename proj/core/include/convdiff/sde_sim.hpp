#pragma once

// Euler-Maruyama simulation of dX = b(X, beta) dt + a(X, alpha) dW.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace convdiff {

/// Closed coordinatewise interval [low_k, high_k].
struct ParamBox {
  std::vector<double> low;
  std::vector<double> high;

  ParamBox() = default;
  ParamBox(std::vector<double> lo, std::vector<double> hi);

  std::size_t size() const noexcept { return low.size(); }
  bool contains(std::span<const double> x) const noexcept;
  std::vector<double> clip(std::span<const double> x) const;
  std::vector<double> center() const;
};

// Callables write into caller-owned buffers so the inner simulation loop
// never allocates.
using DriftFn = std::function<void(std::span<const double> x, std::span<const double> beta,
                                   std::span<double> out)>;
// out is d x r, row major.
using DiffusionFn = std::function<void(std::span<const double> x, std::span<const double> alpha,
                                       std::span<double> out)>;
// out is d x m2, row major, with b(x, beta) = Phi(x) beta.
using DesignFn = std::function<void(std::span<const double> x, std::span<double> out)>;

struct ModelSpec {
  std::string name;
  std::size_t dim_d = 1;
  std::size_t dim_r = 1;
  DriftFn drift;
  DiffusionFn diffusion;
  ParamBox theta1;  // alpha
  ParamBox theta2;  // beta

  // Optional structure. When drift_design is set the drift must equal
  // Phi(x) beta; when constant_diffusion is true a(x, alpha) must not depend
  // on x. The estimators use these to work on sufficient statistics.
  DesignFn drift_design;
  bool constant_diffusion = false;
  // a(alpha) is symmetric (d == r) and alpha lists its upper triangle row by row.
  bool symmetric_root_diffusion = false;

  std::size_t alpha_dim() const noexcept { return theta1.size(); }
  std::size_t beta_dim() const noexcept { return theta2.size(); }

  /// Throws ConfigError on inconsistent dimensions, empty boxes or missing callables.
  void validate() const;

  std::vector<double> eval_drift(std::span<const double> x, std::span<const double> beta) const;
  std::vector<double> eval_diffusion(std::span<const double> x,
                                     std::span<const double> alpha) const;
  /// A = a a^T, d x d row major.
  std::vector<double> eval_covariance(std::span<const double> x,
                                      std::span<const double> alpha) const;
};

/// dX = (beta1 X + beta2) dt + alpha dW.
ModelSpec ou_1d();
/// dX = (B X + c) dt + S dW with B = [[b1, b2], [b4, b5]], c = (b3, b6),
/// S = [[a1, a2], [a2, a3]].
ModelSpec ou_2d();
/// Same drift/diffusion as ou_1d with user supplied boxes.
ModelSpec ou_1d(ParamBox theta1, ParamBox theta2);

struct SimConfig {
  std::size_t n_fine = 0;
  double h_fine = 0.0;
  double burn_in = 0.0;
  std::uint64_t seed = 0;
  std::vector<double> x_init;

  /// Number of burn-in steps, round(burn_in / h_fine).
  std::size_t burn_steps() const;
  void validate(std::size_t dim) const;
};

/// Fine-grid trajectory. Index 0 is the start of the burn-in at origin_time;
/// time 0 sits at zero_index.
struct SamplePath {
  double h = 0.0;
  double origin_time = 0.0;
  std::size_t dim = 1;
  std::size_t zero_index = 0;
  std::vector<double> values;  // row major, (N + 1) x dim

  std::size_t size() const noexcept { return dim == 0 ? 0 : values.size() / dim; }
  double at(std::size_t k, std::size_t axis) const { return values[k * dim + axis]; }
  double time(std::size_t k) const noexcept {
    return origin_time + static_cast<double>(k) * h;
  }
};

/// xoshiro256** seeded through splitmix64.
class Xoshiro256 {
 public:
  explicit Xoshiro256(std::uint64_t seed);
  std::uint64_t next() noexcept;
  /// Uniform on the open interval (0, 1).
  double uniform() noexcept;

 private:
  std::uint64_t s_[4];
};

/// Standard normals by the 128-layer ziggurat.
class NormalGenerator {
 public:
  explicit NormalGenerator(std::uint64_t seed) : rng_(seed) {}
  double operator()() noexcept;

 private:
  Xoshiro256 rng_;
};

/// Seed of replication r.
inline std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t r) noexcept { return seed ^ r; }

/// Step-by-step Euler-Maruyama integrator. Fine index 0 is x_init; each
/// advance() produces the next index.
class EulerStepper {
 public:
  EulerStepper(const ModelSpec& model, std::span<const double> alpha,
               std::span<const double> beta, const SimConfig& cfg);

  std::span<const double> state() const noexcept { return x_; }
  std::size_t index() const noexcept { return index_; }
  /// Total number of steps, burn-in included.
  std::size_t total_steps() const noexcept { return total_; }
  void advance();

 private:
  const ModelSpec& model_;
  std::vector<double> alpha_;
  std::vector<double> beta_;
  double h_;
  double sqrt_h_;
  std::size_t index_ = 0;
  std::size_t total_ = 0;
  NormalGenerator normal_;
  std::vector<double> x_;
  std::vector<double> drift_;
  std::vector<double> diff_;
  std::vector<double> z_;
};

SamplePath euler_maruyama(const ModelSpec& model, std::span<const double> alpha,
                          std::span<const double> beta, const SimConfig& cfg);

/// time,value_1,...,value_d
void write_path_csv(const SamplePath& path, std::ostream& out);

}  // namespace convdiff

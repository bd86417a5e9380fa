#include "convdiff/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "convdiff/errors.hpp"

namespace convdiff::quadrature {

namespace {

constexpr std::size_t kMinGrid = 1000;

void check_grid(std::size_t n_grid) {
  if (n_grid < kMinGrid) {
    throw DomainError("quadrature grid must have at least 1000 points, got " +
                      std::to_string(n_grid));
  }
}

void check_rho(double rho) {
  if (!(rho >= 0.0) || !std::isfinite(rho)) {
    throw DomainError("quadrature: smoothing argument must be finite and nonnegative");
  }
}

// Anchor p with every kernel support inside [0, p + 2].
double anchor_for(double rho_i, double rho_j) {
  return std::floor(std::max(rho_i, rho_j)) + 1.0;
}

bool by_position(const Atom& x, const Atom& y) { return x.position < y.position; }

Measure sorted_copy(const Measure& m) {
  Measure out = m;
  std::sort(out.begin(), out.end(), by_position);
  return out;
}

}  // namespace

Measure kernel_measure(double rho, double anchor, std::size_t n_grid) {
  check_rho(rho);
  if (rho == 0.0) return {{anchor, 1.0}};
  Measure m;
  m.reserve(n_grid);
  const double mass = 1.0 / static_cast<double>(n_grid);
  for (std::size_t k = n_grid; k-- > 0;) {
    const double offset = rho * (static_cast<double>(k) + 0.5) / static_cast<double>(n_grid);
    m.push_back({anchor - offset, mass});
  }
  return m;
}

Measure difference_measure(double rho, double upper, double lower, std::size_t n_grid) {
  const Measure plus = kernel_measure(rho, upper, n_grid);
  Measure minus = kernel_measure(rho, lower, n_grid);
  for (Atom& a : minus) a.mass = -a.mass;
  Measure m(plus.size() + minus.size());
  std::merge(plus.begin(), plus.end(), minus.begin(), minus.end(), m.begin(), by_position);
  return m;
}

double brownian_pairing(const Measure& a, const Measure& b) {
  Measure lhs_copy, rhs_copy;
  const Measure& xs = std::is_sorted(a.begin(), a.end(), by_position) ? a : (lhs_copy = sorted_copy(a));
  const Measure& ys = std::is_sorted(b.begin(), b.end(), by_position) ? b : (rhs_copy = sorted_copy(b));

  long double total_mass = 0.0L;
  for (const Atom& y : ys) total_mass += y.mass;

  // Sweep x upwards; atoms of b strictly left of x contribute their own
  // position, the remaining ones contribute x.
  long double left_first = 0.0L;
  long double left_mass = 0.0L;
  long double sum = 0.0L;
  std::size_t k = 0;
  for (const Atom& x : xs) {
    while (k < ys.size() && ys[k].position < x.position) {
      left_first += static_cast<long double>(ys[k].position) * ys[k].mass;
      left_mass += ys[k].mass;
      ++k;
    }
    sum += static_cast<long double>(x.mass) *
           (left_first + static_cast<long double>(x.position) * (total_mass - left_mass));
  }
  return static_cast<double>(sum);
}

double oracle_G(double rho_i, double rho_j, std::size_t n_grid) {
  check_grid(n_grid);
  const double p = anchor_for(rho_i, rho_j);
  return brownian_pairing(difference_measure(rho_i, p + 1.0, p, n_grid),
                          difference_measure(rho_j, p + 1.0, p, n_grid));
}

double oracle_D0(double rho_i, double rho_j, std::size_t n_grid) {
  check_grid(n_grid);
  const double p = anchor_for(rho_i, rho_j);
  return brownian_pairing(kernel_measure(rho_i, p, n_grid),
                          difference_measure(rho_j, p + 1.0, p, n_grid));
}

double oracle_K(double rho_i, double rho_j, std::size_t n_grid) {
  check_grid(n_grid);
  const double p = anchor_for(rho_i, rho_j);
  return brownian_pairing(kernel_measure(rho_i, p + 1.0, n_grid),
                          difference_measure(rho_j, p + 1.0, p, n_grid));
}

double oracle_B(double rho, std::size_t n_grid) {
  check_grid(n_grid);
  const double p = anchor_for(rho, rho);
  long double moment = 0.0L;
  for (const Atom& a : difference_measure(rho, p + 1.0, p, n_grid)) {
    moment += static_cast<long double>(a.position) * a.mass;
  }
  return static_cast<double>(moment);
}

double oracle_reduced_qv(double rho, std::size_t n_grid) {
  check_grid(n_grid);
  const double p = anchor_for(rho, rho);
  const Measure step2 = difference_measure(rho, p + 2.0, p, n_grid);
  return 0.5 * brownian_pairing(step2, step2);
}

}  // namespace convdiff::quadrature

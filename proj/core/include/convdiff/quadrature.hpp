#pragma once

// Numerical evaluation of the defining double integrals behind f_G, f_D0 and
// the QV limits. These integrals are written against Brownian covariance
// min{s, s'} and the uniform/Dirac kernel V_{rho,1}; they are evaluated here by
// discretizing each kernel into point masses, independently of the closed
// forms in kernel_math.hpp. Used to audit those closed forms.

#include <cstddef>
#include <vector>

namespace convdiff::quadrature {

struct Atom {
  double position;
  double mass;
};

/// Signed discrete measure on the time axis.
using Measure = std::vector<Atom>;

/// The measure V_{rho,1}(anchor - s) ds. A Dirac kernel (rho == 0) becomes a
/// single unit atom at `anchor`; a uniform window becomes `n_grid` midpoint
/// atoms on [anchor - rho, anchor].
Measure kernel_measure(double rho, double anchor, std::size_t n_grid);

/// V(upper - s) ds - V(lower - s) ds.
Measure difference_measure(double rho, double upper, double lower, std::size_t n_grid);

/// Integral of min{s, s'} against a(ds) b(ds'), i.e. Cov(int W da, int W db)
/// for a standard Brownian motion W. O((|a| + |b|) log |b|).
double brownian_pairing(const Measure& a, const Measure& b);

/// Increment covariance factor (the quantity f_G describes).
double oracle_G(double rho_i, double rho_j, std::size_t n_grid);

/// Level / next-increment cross-covariance factor (the quantity f_D0 describes).
double oracle_D0(double rho_i, double rho_j, std::size_t n_grid);

/// K = G + D0, obtained from its own defining integral.
double oracle_K(double rho_i, double rho_j, std::size_t n_grid);

/// First moment of the increment kernel; equals 1 for every rho (B = I).
double oracle_B(double rho, std::size_t n_grid);

/// Half the step-2 increment variance (the quantity reduced_qv_limit describes).
double oracle_reduced_qv(double rho, std::size_t n_grid);

}  // namespace convdiff::quadrature

#pragma once

#include <cmath>

namespace boltz {

// Thin wrappers over the C library gamma routines, kept in one place so the
// domain checks are uniform.
double log_gamma(double x);
double gamma_fn(double x);
double log_beta(double a, double b);

// Generalized binomial coefficient C(k, j) = Γ(k+1) / (Γ(j+1) Γ(k-j+1)),
// k real, j integer with k - j > -1.
double binomial(double k, int j);

// Γ(x + s) / Γ(x) evaluated through log-gamma.
double gamma_ratio(double x, double s);

}  // namespace boltz

namespace boltz {

// Upper incomplete gamma Γ(a, x) for x > 0 and any real a.
double upper_gamma(double a, double x);

// Epstein zeta of the integer lattice, Σ_{j ∈ Z^d, j != 0} |j|^{-s}, continued to all s != d.
// Z(-β) is the leading correction of the punctured lattice sum of |j|^β φ(j).
double lattice_zeta(int d, double s);

}  // namespace boltz

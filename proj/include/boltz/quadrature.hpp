#pragma once

#include <vector>

namespace boltz {

struct QuadratureRule {
  std::vector<double> x;
  std::vector<double> w;
  std::size_t size() const { return x.size(); }
};

// n-point Gauss–Jacobi rule on [-1, 1] for the weight (1-x)^a (1+x)^b,
// a, b > -1, via Golub–Welsch.
QuadratureRule gauss_jacobi(int n, double a, double b);

inline QuadratureRule gauss_legendre(int n) { return gauss_jacobi(n, 0.0, 0.0); }

// Same rule transported to [0, 1] for the weight (1-s)^a s^b.
QuadratureRule gauss_jacobi_unit(int n, double a, double b);

}  // namespace boltz

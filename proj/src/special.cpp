#include "boltz/special.hpp"

#include <boost/math/special_functions/expint.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace boltz {

double log_gamma(double x) {
  if (!(x > 0.0)) throw std::domain_error("log_gamma: argument must be positive, got " + std::to_string(x));
  return std::lgamma(x);
}

double gamma_fn(double x) {
  if (!(x > 0.0)) throw std::domain_error("gamma_fn: argument must be positive, got " + std::to_string(x));
  return std::tgamma(x);
}

double log_beta(double a, double b) { return log_gamma(a) + log_gamma(b) - log_gamma(a + b); }

double binomial(double k, int j) {
  if (j < 0) return 0.0;
  if (j == 0) return 1.0;
  return std::exp(log_gamma(k + 1.0) - log_gamma(j + 1.0) - log_gamma(k - j + 1.0));
}

double gamma_ratio(double x, double s) { return std::exp(log_gamma(x + s) - log_gamma(x)); }

double upper_gamma(double a, double x) {
  if (!(x > 0.0)) throw std::domain_error("upper_gamma: x must be positive");
  if (a > 0.0) return boost::math::tgamma(a, x);
  if (a == 0.0) return boost::math::expint(1, x);
  return (upper_gamma(a + 1.0, x) - std::pow(x, a) * std::exp(-x)) / a;
}

double lattice_zeta(int d, double s) {
  if (d < 1 || d > 3) throw std::domain_error("lattice_zeta: dimension must be 1, 2 or 3");
  if (s == static_cast<double>(d)) throw std::domain_error("lattice_zeta: pole");
  if (s == 0.0) return -1.0;
  // 1/Γ(s/2) vanishes at the trivial zeros s = -2, -4, ...
  if (s < 0.0 && std::floor(0.5 * s) == 0.5 * s) return 0.0;
  constexpr double pi = std::numbers::pi;
  constexpr int reach = 5;
  double sum = 2.0 / (s - d) - 2.0 / s;
  const int r1 = d >= 2 ? reach : 0;
  const int r2 = d >= 3 ? reach : 0;
  for (int i = -reach; i <= reach; ++i)
    for (int j = -r1; j <= r1; ++j)
      for (int k = -r2; k <= r2; ++k) {
        const int n2 = i * i + j * j + k * k;
        if (n2 == 0) continue;
        const double x = pi * n2;
        sum += upper_gamma(0.5 * s, x) * std::pow(x, -0.5 * s) + upper_gamma(0.5 * (d - s), x) * std::pow(x, -0.5 * (d - s));
      }
  return sum * std::pow(pi, 0.5 * s) / std::tgamma(0.5 * s);
}

}  // namespace boltz

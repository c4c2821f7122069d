#include "boltz/sampling.hpp"

#include <cmath>

namespace boltz {

Field random_nonnegative_field(const VelocityGrid& grid, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> count(1, 3);
  Field f(grid);
  const int m = count(rng);
  for (int j = 0; j < m; ++j) {
    MaxwellianParams p;
    p.a = 0.6 + 1.4 * unit(rng);
    for (int c = 0; c < grid.d; ++c) p.b[c] = p.a * (unit(rng) - 0.5) * 2.0;
    p.c = -norm2(p.b) / (4.0 * p.a) + std::log(0.2 + unit(rng));
    const Field s = sample_maxwellian(p, grid);
    for (std::size_t i = 0; i < f.size(); ++i) f[i] += s[i];
  }
  for (double& x : f.values) x *= 0.5 + unit(rng);
  return f;
}

Field random_signed_field(const VelocityGrid& grid, Rng& rng) {
  Field u = random_nonnegative_field(grid, rng);
  const Field v = random_nonnegative_field(grid, rng);
  for (std::size_t i = 0; i < u.size(); ++i) u[i] -= v[i];
  return u;
}

}  // namespace boltz

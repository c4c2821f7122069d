#include "boltz/estimates.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace boltz {

double WeightFunction::operator()(const Vec3& v) const {
  const double e = beta - eps;
  if (e == 0.0) return 2.0;
  return 1.0 + std::pow(std::sqrt(norm2(v)), e);
}

WeightFunction make_weight_function(const KernelModel& kernel) {
  WeightFunction w;
  w.beta = kernel.beta();
  w.eps = kernel.epsilon_weight();
  if (!(w.eps > 0.0)) throw std::invalid_argument("weight exponent must be positive");
  return w;
}

KernelBoundConstants kernel_bound_constants(const KernelModel& kernel, double a) {
  if (!(a > 0.0)) throw std::invalid_argument("kernel bound needs a > 0");
  KernelBoundConstants c;
  const int d = kernel.d();
  const double alpha = kernel.alpha();
  const double beta = kernel.beta();
  const double ea = d - 1.0 - alpha;
  c.a = a;
  c.eps = kernel.epsilon_weight();
  if (kernel.profile() == ProfileKind::power_singular) {
    c.c_profile = 2.0 * kernel.amplitude();
  } else {
    double sup = 0.0;
    for (int i = 0; i <= 4000; ++i) sup = std::max(sup, 2.0 * kernel.hbar_regular(std::min(i / 4000.0, 1.0 - 1e-12)));
    c.c_profile = sup;
  }
  c.case_a = std::pow(2.0, ea) * (1.0 + std::pow(2.0, 0.5 * beta)) * kernel.omega() / ea;
  c.case_b = std::pow(2.0, d - alpha + 0.5 * beta) * (kernel.omega() / ea + std::pow(std::numbers::pi / a, 0.5 * (d - 1.0)));
  c.total = c.c_profile * std::max(c.case_a, c.case_b);
  return c;
}

GainBoundReport verify_weighted_gain_bound(const Field& f, const MaxwellianParams& M, const CollisionOperator& op) {
  if (M.b != Vec3{0.0, 0.0, 0.0}) throw std::invalid_argument("weighted gain bound requires a centered Maxwellian");
  const VelocityGrid& g = op.grid();
  if (f.grid != g) throw std::invalid_argument("weighted gain bound: grid mismatch");
  GainBoundReport rep;
  rep.constants = kernel_bound_constants(op.kernel(), M.a);
  rep.offset_factor = std::exp(M.c);
  const WeightFunction w = make_weight_function(op.kernel());
  const Field Mf = sample_maxwellian(M, g);
  const Field q = op.gain(f, Mf);
  double lhs = 0.0, norm = 0.0;
  const double vol = g.cell_volume();
  for (std::size_t i = 0; i < f.size(); ++i) {
    const Vec3 v = g.velocity(i);
    const double lm = M.log_value(v);
    const double wv = w(v);
    if (q[i] > 0.0) lhs = std::max(lhs, std::exp(std::log(q[i] / wv) - lm));
    if (f[i] != 0.0) norm += std::abs(f[i]) * wv * std::exp(-lm) * vol;
  }
  rep.lhs = lhs;
  rep.norm = norm;
  rep.rhs = rep.offset_factor * rep.constants.total * norm;
  rep.margin = rep.rhs - rep.lhs;
  rep.holds = rep.lhs <= rep.rhs;
  return rep;
}

DissipativityValue dissipativity_functional(const Field& f, const Field& u, const CollisionOperator& op,
                                            double sign_at_zero) {
  if (sign_at_zero < -1.0 || sign_at_zero > 1.0) throw std::invalid_argument("sign(0) must lie in [-1, 1]");
  require_same_grid(f, u, "dissipativity_functional");
  const Field qp = op.weak_gain(f, u);
  const Field nu = op.frequency(f);
  DissipativityValue out;
  const double vol = f.grid.cell_volume();
  double numax = 0.0, unorm = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double s = u[i] > 0.0 ? 1.0 : (u[i] < 0.0 ? -1.0 : sign_at_zero);
    const double q = qp[i] - nu[i] * u[i];
    out.sign_form += q * s * vol;
    out.half_form += q * 0.5 * (s + 1.0) * vol;
    numax = std::max(numax, nu[i]);
    unorm += std::abs(u[i]) * vol;
  }
  out.scale = unorm * numax;
  return out;
}

HolderGap holder_gap(const Field& f, const Field& g, double p, double k, const CollisionOperator& op) {
  const double beta = op.kernel().beta();
  if (!(k > p + 0.5 * beta)) throw std::invalid_argument("holder_gap requires k > p + beta/2");
  require_same_grid(f, g, "holder_gap");
  const Field qf = op.collision(f);
  const Field qg = op.collision(g);
  Field diff(f.grid), sum(f.grid), qd(f.grid);
  for (std::size_t i = 0; i < f.size(); ++i) {
    diff[i] = f[i] - g[i];
    sum[i] = f[i] + g[i];
    qd[i] = qf[i] - qg[i];
  }
  HolderGap h;
  h.lhs = weighted_l1(qd, p);
  h.distance = l1_norm(diff);
  const double theta = (p + 0.5 * beta) / k;
  h.c_p = std::pow(2.0, p + 3.0) * weighted_l1(sum, k) * (1.0 + std::pow(weighted_l1(f, k) + weighted_l1(g, k), theta));
  h.rhs = h.c_p * (std::pow(h.distance, 1.0 - theta) + h.distance);
  h.holds = h.lhs <= h.rhs;
  return h;
}

}  // namespace boltz

#include "boltz/barrier.hpp"

#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace boltz {

void BarrierInputs::validate() const {
  if (!(a0 > 0.0)) throw std::invalid_argument("barrier: a0 must be positive");
  if (!(0.0 < a && a < a1)) throw std::invalid_argument("barrier: 0 < a < a1 required");
  if (!(a1 < a0)) throw std::invalid_argument("barrier: a1 < a0 required");
  if (!(rho0 > 0.0)) throw std::invalid_argument("barrier: rho0 must be positive");
  if (!(C0 > 0.0) || !(C1 > 0.0)) throw std::invalid_argument("barrier: C0 and C1 must be positive");
}

double compute_L(double a1, double c1, double beta) {
  if (!(a1 > 0.0)) throw std::invalid_argument("compute_L: a1 must be positive");
  return std::pow(beta / (2.0 * a1), 0.5 * beta) * std::exp(c1 - 0.5 * beta);
}

double compute_L_search(double a1, double c1, double beta, int samples) {
  const double ymax = std::sqrt(beta / (2.0 * a1)) * 4.0 + 1.0;
  double best = 0.0;
  for (int i = 0; i < samples; ++i) {
    const double y = ymax * i / (samples - 1);
    best = std::max(best, std::pow(y, beta) * std::exp(-a1 * y * y + c1));
  }
  return best;
}

double r_equation_residual(double R, double C, double LC1, double rho0, double beta, double eps) {
  const double pos = C + LC1 + C * std::pow(R, beta - eps);
  return (pos - rho0 * std::pow(R, beta)) / pos;
}

double compute_R(double C, double LC1, double rho0, double beta, double eps) {
  if (!(rho0 > 0.0)) throw std::invalid_argument("compute_R: rho0 must be positive");
  if (!(eps > 0.0 && eps <= beta)) throw std::invalid_argument("compute_R: 0 < eps <= beta required");
  if (!(C >= 0.0 && LC1 >= 0.0) || C + LC1 == 0.0) throw std::invalid_argument("compute_R: no positive root");
  if (eps == beta) return std::pow((2.0 * C + LC1) / rho0, 1.0 / beta);
  // In s = y^β: F(s) = C + LC₁ + C s^{1-ε/β} - ρ₀ s is concave, F(0) > 0.
  const double p = 1.0 - eps / beta;
  auto F = [&](double s) { return C + LC1 + C * std::pow(s, p) - rho0 * s; };
  double hi = (C + LC1) / rho0 + 1.0;
  while (F(hi) > 0.0) {
    hi *= 2.0;
    if (!std::isfinite(hi)) throw std::runtime_error("compute_R: failed to bracket the root");
  }
  std::uintmax_t iters = 200;
  const auto r = boost::math::tools::toms748_solve(F, 0.0, hi, boost::math::tools::eps_tolerance<double>(52), iters);
  return std::pow(0.5 * (r.first + r.second), 1.0 / beta);
}

namespace {

double lambda_factor(double beta, double eps, double gap) {
  if (beta == eps) return 2.0;
  // sup_y (1+y^{β-ε})e^{-gap y²}: concave-then-decaying, golden section over a safe bracket.
  auto g = [&](double y) { return (1.0 + std::pow(y, beta - eps)) * std::exp(-gap * y * y); };
  double lo = 0.0, hi = 10.0 / std::sqrt(gap);
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = hi - phi * (hi - lo), x2 = lo + phi * (hi - lo);
  for (int it = 0; it < 200; ++it) {
    if (g(x1) < g(x2)) {
      lo = x1;
      x1 = x2;
      x2 = lo + phi * (hi - lo);
    } else {
      hi = x2;
      x2 = x1;
      x1 = hi - phi * (hi - lo);
    }
  }
  return std::max(g(0.5 * (lo + hi)), 1.0);
}

}  // namespace

BarrierCertificate build_barrier(const BarrierInputs& in, const KernelModel& kernel) {
  in.validate();
  BarrierCertificate cert;
  cert.inputs = in;
  cert.beta = kernel.beta();
  cert.eps = std::min(cert.beta, kernel.epsilon_angular());
  cert.L = compute_L(in.a1, in.c1, cert.beta);
  cert.lambda = lambda_factor(cert.beta, cert.eps, in.a1 - in.a);
  cert.kernel_constants = kernel_bound_constants(kernel, in.a);
  cert.C = cert.kernel_constants.total * in.C1 * std::exp(in.c1) * cert.lambda;
  cert.R = compute_R(cert.C, cert.L * in.C1, in.rho0, cert.beta, cert.eps);
  cert.log_c0_term = in.a * cert.R * cert.R + std::log(in.C0);
  cert.c = std::max(cert.log_c0_term, in.c0);
  return cert;
}

namespace {

TailReport tail_check(const Field& qp, const Field& qm, double radius, double delta, double eta) {
  TailReport t;
  t.radius = radius;
  double scale = 0.0;
  for (std::size_t i = 0; i < qm.size(); ++i) scale = std::max(scale, qm[i]);
  const double r2 = radius * radius;
  for (std::size_t i = 0; i < qp.size(); ++i) {
    if (norm2(qp.grid.velocity(i)) <= r2) continue;
    ++t.cells;
    const double excess = qp[i] - qm[i] * (1.0 + delta) - eta * scale;
    if (scale > 0.0) t.worst_excess = std::max(t.worst_excess, excess / scale);
    if (excess > 0.0) ++t.failures;
  }
  t.pass = t.failures == 0;
  return t;
}

}  // namespace

BarrierCheck check_barrier_inequality(const Field& f, const BarrierCertificate& cert, const CollisionOperator& op,
                                      double delta, double eta_scale) {
  const VelocityGrid& g = op.grid();
  if (f.grid != g) throw std::invalid_argument("check_barrier_inequality: grid mismatch");
  const BarrierInputs& in = cert.inputs;
  BarrierCheck out;
  out.delta = delta;
  out.eta_scale = eta_scale;

  Hypotheses& h = out.hypotheses;
  const double vol = g.cell_volume();
  const MaxwellianParams m1{in.a1, {0.0, 0.0, 0.0}, in.c1};
  bool negative = false;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (f[i] < 0.0) negative = true;
    h.mass += f[i] * vol;
    h.sup_f = std::max(h.sup_f, f[i]);
    if (f[i] > 0.0) h.weighted_mass += std::exp(std::log(f[i]) - m1.log_value(g.velocity(i))) * vol;
  }
  h.density_ok = h.mass >= in.rho0;
  h.sup_ok = h.sup_f <= in.C0;
  h.weighted_ok = h.weighted_mass <= in.C1;
  out.applicable = h.applicable() && !negative;
  if (negative) out.note = "field has negative cells";
  else if (!h.density_ok) out.note = "density below rho0";
  else if (!h.sup_ok) out.note = "sup f exceeds C0";
  else if (!h.weighted_ok) out.note = "weighted mass exceeds C1";

  // Both sides are linear in M, so the barrier offset c is divided out.
  const MaxwellianParams ma{in.a, {0.0, 0.0, 0.0}, 0.0};
  const Field Ma = sample_maxwellian(ma, g);
  const Field qp = op.gain(f, Ma);
  const Field qm = op.loss(f, Ma);
  const WeightFunction w = make_weight_function(op.kernel());
  for (std::size_t i = 0; i < qp.size(); ++i) {
    if (qp[i] <= 0.0) continue;
    const Vec3 v = g.velocity(i);
    out.c_observed = std::max(out.c_observed, std::exp(std::log(qp[i] / w(v)) - ma.log_value(v)));
  }
  out.tail = tail_check(qp, qm, cert.R, delta, eta_scale);
  if (out.c_observed > 0.0) {
    out.r_observed = compute_R(out.c_observed, cert.L * in.C1, in.rho0, cert.beta, cert.eps);
    out.tail_observed = tail_check(qp, qm, out.r_observed, delta, eta_scale);
  }

  const MaxwellianParams M = cert.barrier();
  const double r2 = cert.R * cert.R;
  const double lc0 = std::log(in.C0);
  // min_{|v|<=R} M = e^{c-aR²}, attained on the sphere even when it lies outside the box.
  out.in_ball = M.c - in.a * r2 >= lc0 - 1e-12 * std::max({1.0, std::abs(lc0), std::abs(M.c)});
  out.ball_min_f = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < f.size(); ++i) {
    const Vec3 v = g.velocity(i);
    if (norm2(v) > r2) continue;
    const double lm = M.log_value(v);
    out.ball_min_f = std::min(out.ball_min_f, f[i]);
    if (f[i] > 0.0) out.in_ball_worst = std::max(out.in_ball_worst, std::exp(std::log(f[i]) - lm));
    if (f[i] > in.C0 || lm < lc0 - 1e-12 * std::max(1.0, std::abs(lc0))) out.in_ball = false;
  }
  if (!std::isfinite(out.ball_min_f)) out.ball_min_f = 0.0;
  out.pass = out.applicable && out.tail.pass && out.in_ball;
  return out;
}

LinearOrderVerdict evolve_linear_order_check(const Field& f_frozen, const Field& u0, double dt, int steps,
                                             const CollisionOperator& op, bool project) {
  if (f_frozen.grid != op.grid() || u0.grid != op.grid()) throw std::invalid_argument("evolve_linear_order_check: grid mismatch");
  for (std::size_t i = 0; i < f_frozen.size(); ++i) {
    if (f_frozen[i] < 0.0) throw std::invalid_argument("evolve_linear_order_check: frozen field must be nonnegative");
  }
  double u0max = 0.0;
  for (std::size_t i = 0; i < u0.size(); ++i) {
    if (u0[i] > 0.0) throw std::invalid_argument("evolve_linear_order_check: u0 must be nonpositive");
    u0max = std::max(u0max, std::abs(u0[i]));
  }
  const Field nu = op.frequency(f_frozen);
  double numax = 0.0;
  for (std::size_t i = 0; i < nu.size(); ++i) numax = std::max(numax, nu[i]);
  LinearOrderVerdict out;
  out.dt_nu_max = dt * numax;
  if (!(dt > 0.0) || out.dt_nu_max > 1.0) {
    throw std::invalid_argument("evolve_linear_order_check: dt*nu_max = " + std::to_string(out.dt_nu_max) +
                                " exceeds 1, discrete scheme is not order preserving");
  }
  Field u = u0;
  for (int s = 0; s < steps; ++s) {
    const Field qp = op.weak_gain(f_frozen, u);
    double before = 0.0, after = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
      before += u[i];
      u[i] += dt * (qp[i] - nu[i] * u[i]);
      after += u[i];
    }
    if (project && after != 0.0) {
      const double scale = before / after;
      after = 0.0;
      for (double& x : u.values) {
        x *= scale;
        after += x;
      }
    }
    if (before != 0.0) out.worst_mass_drift = std::max(out.worst_mass_drift, std::abs(after - before) / std::abs(before));
    for (std::size_t i = 0; i < u.size(); ++i) {
      if (u0max > 0.0) out.worst_positive = std::max(out.worst_positive, u[i] / u0max);
      else out.worst_positive = std::max(out.worst_positive, u[i]);
    }
    ++out.steps;
  }
  out.pass = out.worst_positive <= 1e-12;
  return out;
}

}  // namespace boltz

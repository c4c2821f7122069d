#include "boltz/moments.hpp"

#include <boost/numeric/odeint.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "boltz/special.hpp"

namespace boltz {

namespace {

double ledger_m(const MomentLedger& led, double k) {
  const int i = led.find(k);
  if (i < 0) throw std::invalid_argument("missing moment index k = " + std::to_string(k));
  return led.m[i];
}

double ledger_z(const MomentLedger& led, double k) {
  const int i = led.find(k);
  if (i < 0) throw std::invalid_argument("missing moment index k = " + std::to_string(k));
  return led.z[i];
}

}  // namespace

GainAverage gain_average_bound(const Vec3& v, const Vec3& vs, const KernelModel& kernel, double k,
                               const AngularQuadrature& full) {
  if (k < 0.0) throw std::invalid_argument("gain_average_bound: k must be nonnegative");
  if (full.folded) throw std::invalid_argument("gain_average_bound needs the full-sphere rule");
  const int d = kernel.d();
  auto psi = [k](double x) { return k == 0.0 ? 1.0 : std::pow(x, k); };
  const Vec3 u{v[0] - vs[0], v[1] - vs[1], v[2] - vs[2]};
  const double ul = std::sqrt(norm2(u));
  const Vec3 mid{0.5 * (v[0] + vs[0]), 0.5 * (v[1] + vs[1]), 0.5 * (v[2] + vs[2])};
  GainAverage out;
  if (ul == 0.0) {
    out.g = psi(norm2(v));
  } else {
    const Vec3 e0{u[0] / ul, u[1] / ul, u[2] / ul};
    Vec3 e1, e2;
    orthonormal_frame(d, e0, e1, e2);
    for (std::size_t q = 0; q < full.size(); ++q) {
      const double z = full.z[q];
      const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
      Vec3 vp, vps;
      for (int c = 0; c < 3; ++c) {
        const double s = z * e0[c] + r * (full.cphi[q] * e1[c] + full.sphi[q] * e2[c]);
        vp[c] = mid[c] + 0.5 * ul * s;
        vps[c] = mid[c] - 0.5 * ul * s;
      }
      out.g += full.w[q] * 0.5 * (psi(norm2(vps)) + psi(norm2(vp)));
    }
  }
  out.bound = 0.5 * compute_ak(kernel, k) * psi(norm2(v) + norm2(vs));
  out.holds = out.g <= out.bound * (1.0 + 1e-12) + 1e-300;
  return out;
}

PovznerTerms povzner_terms(double k, double beta, const MomentLedger& ledger) {
  if (k < 1.0) throw std::invalid_argument("povzner_terms: k must be at least 1");
  const double hb = 0.5 * beta;
  const int jmax = static_cast<int>(std::floor((k + 1.0) / 2.0 + 1e-12));
  PovznerTerms t;
  for (int j = 1; j <= jmax; ++j) {
    const double c = binomial(k, j);
    t.s += c * (ledger_m(ledger, j + hb) * ledger_m(ledger, k - j) + ledger_m(ledger, k - j + hb) * ledger_m(ledger, j));
    t.z = std::max({t.z, ledger_z(ledger, j + hb) * ledger_z(ledger, k - j), ledger_z(ledger, j) * ledger_z(ledger, k - j + hb)});
  }
  t.gamma_factor = gamma_fn(k + hb + 2.0 * ledger.b_norm);
  t.ratio = t.z > 0.0 ? t.s / (t.gamma_factor * t.z) : 0.0;
  return t;
}

MomentLedger maxwellian_ledger(int d, double a, double m0, const std::vector<double>& ks, double b_norm) {
  if (!(a > 0.0) || !(m0 > 0.0)) throw std::invalid_argument("maxwellian_ledger: a and m0 must be positive");
  MomentLedger led;
  led.b_norm = b_norm;
  led.k = ks;
  for (double k : ks) {
    const double lm = std::log(m0) + log_gamma(k + 0.5 * d) - log_gamma(0.5 * d) - k * std::log(a);
    led.m.push_back(std::exp(lm));
    led.z.push_back(std::exp(lm - log_gamma(k + b_norm)));
  }
  return led;
}

double calibrate_cb(double beta, const std::vector<MomentLedger>& sweep, double k_max) {
  double worst = 0.0;
  for (const MomentLedger& led : sweep) {
    for (double k : index_set(beta, 2.0 * k_max)) {
      if (k < 1.0) continue;
      worst = std::max(worst, povzner_terms(k, beta, led).ratio);
    }
  }
  if (!(worst > 0.0)) throw std::invalid_argument("calibrate_cb: empty calibration sweep");
  return 1.05 * worst;
}

std::map<double, double> lower_moment_constants(const KernelModel& kernel) {
  const double beta = kernel.beta();
  const double hb = 0.5 * beta;
  auto ratio = [&](double alpha) {
    const double a = compute_ak(kernel, alpha);
    if (!(a > 1.0)) throw std::invalid_argument("degenerate kernel: a_alpha <= 1 at alpha = " + std::to_string(alpha));
    return (a - 1.0) / (a + 1.0);
  };
  int j = 1;
  while ((j + 1) * hb < 1.0 - 1e-12) ++j;
  std::map<double, double> c;
  c[1.0] = 1.0;
  double alpha = j * hb;
  double prev = std::min(1.0, std::pow(ratio(alpha), alpha / (alpha + hb)));
  c[alpha] = prev;
  for (double next = alpha - hb; next > 1e-12; next -= hb) {
    prev = std::min(1.0, std::pow(ratio(next) * prev, next / alpha));
    c[next] = prev;
    alpha = next;
  }
  return c;
}

double lower_moment_constant(const std::map<double, double>& table, double alpha) {
  for (const auto& [a, c] : table) {
    if (std::abs(a - alpha) < 1e-9) return c;
  }
  throw std::invalid_argument("no lower-moment constant for alpha = " + std::to_string(alpha));
}

int MomentSystemConstants::find(double kv) const {
  for (std::size_t i = 0; i < k.size(); ++i) {
    if (std::abs(k[i] - kv) <= 1e-9) return static_cast<int>(i);
  }
  return -1;
}

double coefficient_a_k(double ak, double nu0, double m0, double k, double beta, double b_norm) {
  const double e = beta / (2.0 * k);
  return (1.0 - ak) * nu0 * std::pow(m0, -e) * std::exp(e * log_gamma(k + b_norm));
}

double coefficient_b_k(double ak, double c_b, double k, double beta, double b_norm) {
  return ak * c_b * std::exp(log_gamma(k + 0.5 * beta + 2.0 * b_norm) - log_gamma(k + b_norm));
}

MomentSystemConstants system_constants(const KernelModel& kernel, const Field& f0, const CollisionOperator& op,
                                       const SystemOptions& opts) {
  MomentSystemConstants s;
  s.beta = kernel.beta();
  s.eps = kernel.epsilon_angular();
  s.b_norm = opts.b_norm > 0.0 ? opts.b_norm : 0.25 * s.eps;
  if (!(s.b_norm < 0.5 * s.eps)) throw std::invalid_argument("b_norm must lie in (0, eps/2)");
  s.m0 = total_mass(f0);
  if (!(s.m0 > 0.0)) throw std::invalid_argument("system_constants: initial field has zero mass");

  const auto cs = lower_moment_constants(kernel);
  s.c_nu = lower_moment_constant(cs, 0.5 * s.beta);
  const Field nu = op.frequency(f0);
  double mn = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < nu.size(); ++i) {
    const double r = std::sqrt(norm2(f0.grid.velocity(i)));
    mn = std::min(mn, nu[i] / (1.0 + std::pow(r, s.beta)));
  }
  s.nu_min_ratio = mn;
  s.nu0 = s.c_nu * mn;

  if (opts.c_b > 0.0) {
    s.c_b = opts.c_b;
  } else {
    const auto ks2 = index_set(s.beta, 2.0 * opts.k_max);
    std::vector<MomentLedger> sweep{maxwellian_ledger(kernel.d(), 1.0, 1.0, ks2, s.b_norm),
                                    normalized_moments(f0, ks2, s.b_norm)};
    s.c_b = calibrate_cb(s.beta, sweep, opts.k_max);
  }

  s.k = index_set(s.beta, opts.k_max);
  s.k_star = 0.0;
  for (double k : s.k) {
    if (k > 1.0 + 0.5 * s.beta + 1e-12) {
      s.k_star = k;
      break;
    }
  }
  if (s.k_star == 0.0) throw std::invalid_argument("k_max too small: no index above 1 + beta/2");

  s.a_bar = std::numeric_limits<double>::infinity();
  s.b_bar = 0.0;
  for (double k : s.k) {
    const double ak = compute_ak(kernel, k);
    s.a.push_back(ak);
    if (k + 1e-12 < s.k_star) {
      s.big_a.push_back(0.0);
      s.big_b.push_back(0.0);
      continue;
    }
    const double A = coefficient_a_k(ak, s.nu0, s.m0, k, s.beta, s.b_norm);
    const double B = coefficient_b_k(ak, s.c_b, k, s.beta, s.b_norm);
    s.big_a.push_back(A);
    s.big_b.push_back(B);
    s.a_bar = std::min(s.a_bar, A / std::pow(k, 0.5 * s.beta));
    s.b_bar = std::max(s.b_bar, B / std::pow(k, 0.5 * s.beta + s.b_norm - 0.5 * s.eps));
  }
  s.c0 = s.a_bar / s.b_bar * std::pow(s.k_star, 0.5 * s.eps - s.b_norm);
  return s;
}

BernoulliCap bernoulli_cap(double A, double B, double C, double q, double k, double beta, double z0) {
  if (!(A > 0.0 && B > 0.0 && C > 0.0 && q > 0.0)) throw std::invalid_argument("bernoulli_cap: A, B, C, q must be positive");
  if (!(k > 0.5 * beta)) throw std::invalid_argument("bernoulli_cap: k must exceed beta/2");
  const double e = 1.0 + beta / (2.0 * k);
  BernoulliCap out;
  out.z_star = std::exp((std::log(B) + 2.0 * std::log(C) + (k + 0.5 * beta) * std::log(q) - std::log(A)) / e);
  out.cap = std::max(z0, out.z_star);
  out.ratio_condition = A / B >= std::pow(C, 1.0 - beta / (2.0 * k)) * (1.0 - 1e-12);
  out.below_geometric = out.z_star <= C * std::pow(q, k) * (1.0 + 1e-12);
  return out;
}

BernoulliTrajectory integrate_bernoulli(double A, double S, double k, double beta, double z0, double t_end) {
  namespace ode = boost::numeric::odeint;
  const double e = 1.0 + beta / (2.0 * k);
  using State = std::array<double, 1>;
  State z{z0};
  BernoulliTrajectory tr;
  tr.z_max = z0;
  auto rhs = [&](const State& x, State& dx, double) { dx[0] = -A * std::pow(std::max(x[0], 0.0), e) + S; };
  auto observe = [&](const State& x, double) { tr.z_max = std::max(tr.z_max, x[0]); };
  auto stepper = ode::make_dense_output(1e-12, 1e-12, ode::runge_kutta_dopri5<State>());
  ode::integrate_adaptive(stepper, rhs, z, 0.0, t_end, t_end / 1000.0, observe);
  tr.z_end = z[0];
  tr.z_max = std::max(tr.z_max, z[0]);
  return tr;
}

GrowthConstants growth_constants(const MomentSystemConstants& sys, const MomentLedger& initial, double k_limit) {
  GrowthConstants g;
  g.c = 1.0;
  for (std::size_t i = 0; i < sys.k.size(); ++i) {
    const double k = sys.k[i];
    if (k + 1e-12 < sys.k_star || k > k_limit + 1e-12) continue;
    g.c = std::min(g.c, std::pow(sys.big_a[i] / sys.big_b[i], 1.0 / (1.0 - sys.beta / (2.0 * k))));
  }
  double q = 0.0;
  for (std::size_t i = 0; i < initial.k.size(); ++i) {
    const double k = initial.k[i];
    if (k < 1.0 || k > k_limit + 1e-12) continue;
    q = std::max(q, std::pow(initial.z[i] / g.c, 1.0 / k));
  }
  g.q = q > 0.0 ? 1.05 * q : 1.0;
  return g;
}

namespace {

double z_cap(double C, double q, double k) { return C * std::pow(q, k); }

double big_z(const MomentLedger& led, double k, double beta) {
  const double hb = 0.5 * beta;
  const int jmax = static_cast<int>(std::floor((k + 1.0) / 2.0 + 1e-12));
  double z = 0.0;
  for (int j = 1; j <= jmax; ++j)
    z = std::max({z, ledger_z(led, j + hb) * ledger_z(led, k - j), ledger_z(led, j) * ledger_z(led, k - j + hb)});
  return z;
}

}  // namespace

GrowthCertificate verify_geometric_bound(const MomentSeries& series, const MomentSystemConstants& sys, double C,
                                         double q, double k_limit) {
  const std::size_t n = series.t.size();
  if (n < 10 || series.ledgers.size() != n) throw std::invalid_argument("moment series needs at least 10 samples");
  const double dt = (series.t.back() - series.t.front()) / static_cast<double>(n - 1);
  if (!(dt > 0.0)) throw std::invalid_argument("moment series time mesh must increase");
  for (std::size_t i = 0; i < n; ++i) {
    if (std::abs(series.t[i] - series.t.front() - dt * i) > 1e-6 * dt) throw std::invalid_argument("moment series time mesh must be uniform");
  }
  GrowthCertificate cert;
  cert.c = C;
  cert.q = q;
  auto fail = [&](double k, double t, const std::string& why) {
    if (cert.failed) return;
    cert.failed = true;
    cert.fail_k = k;
    cert.fail_t = t;
    cert.fail_reason = why;
  };

  for (std::size_t idx = 0; idx < sys.k.size(); ++idx) {
    const double k = sys.k[idx];
    if (k < 1.0 || k > k_limit + 1e-12) continue;
    GrowthVerdict v;
    v.k = k;
    const double cap = z_cap(C, q, k);
    std::vector<double> z(n);
    for (std::size_t i = 0; i < n; ++i) z[i] = ledger_z(series.ledgers[i], k);
    if (!(z[0] <= cap)) {
      v.pass = false;
      fail(k, series.t[0], "initial bound z_k(0) <= C q^k violated");
    }
    for (std::size_t i = 0; i < n; ++i) {
      v.worst_bound = std::max(v.worst_bound, z[i] / cap);
      if (!(z[i] <= cap)) {
        v.pass = false;
        fail(k, series.t[i], k + 1e-12 < sys.k_star ? "lower-order bound z_k <= C q^k violated" : "geometric bound violated");
      }
    }
    if (k + 1e-12 >= sys.k_star) {
      const double A = sys.big_a[idx], B = sys.big_b[idx];
      v.ratio_condition = A / B >= std::pow(C, 1.0 - sys.beta / (2.0 * k));
      double zpp = 0.0;
      for (std::size_t i = 1; i + 1 < n; ++i) zpp = std::max(zpp, std::abs(z[i + 1] - 2.0 * z[i] + z[i - 1]) / (dt * dt));
      const double tol = 10.0 * dt * dt * zpp;
      const double e = 1.0 + sys.beta / (2.0 * k);
      v.worst_slack = -std::numeric_limits<double>::infinity();
      for (std::size_t i = 1; i + 1 < n; ++i) {
        const double deriv = (z[i + 1] - z[i - 1]) / (2.0 * dt);
        const double rhs = -A * std::pow(std::max(z[i], 0.0), e) + B * big_z(series.ledgers[i], k, sys.beta);
        const double slack = deriv - rhs - tol;
        v.worst_slack = std::max(v.worst_slack, slack);
        if (slack > 0.0) {
          v.pass = false;
          fail(k, series.t[i], "differential inequality violated");
        }
      }
    }
    cert.per_k.push_back(v);
  }
  cert.pass = !cert.failed;
  return cert;
}

std::vector<LowerMomentVerdict> verify_lower_moments(const MomentSeries& series, const std::map<double, double>& table) {
  if (series.ledgers.empty()) throw std::invalid_argument("verify_lower_moments: empty series");
  std::vector<LowerMomentVerdict> out;
  const MomentLedger& first = series.ledgers.front();
  for (const auto& [alpha, c] : table) {
    if (first.find(alpha) < 0) continue;
    LowerMomentVerdict v;
    v.alpha = alpha;
    v.c_alpha = c;
    const double m0 = first.m_at(alpha);
    v.worst_ratio = std::numeric_limits<double>::infinity();
    for (const auto& led : series.ledgers) v.worst_ratio = std::min(v.worst_ratio, led.m_at(alpha) / m0);
    v.pass = v.worst_ratio >= c * (1.0 - 1e-12);
    out.push_back(v);
  }
  return out;
}

}  // namespace boltz

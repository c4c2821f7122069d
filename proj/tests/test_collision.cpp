#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "boltz/collision.hpp"
#include "boltz/estimates.hpp"
#include "boltz/quadrature.hpp"
#include "boltz/sampling.hpp"
#include "boltz/special.hpp"

using namespace boltz;
using doctest::Approx;

namespace {

KernelModel hard_sphere(int d = 3) {
  KernelSpec s;
  s.d = d;
  return normalize_kernel(s);
}

KernelModel power(double alpha) {
  KernelSpec s;
  s.profile = ProfileKind::power_singular;
  s.alpha = alpha;
  return normalize_kernel(s);
}

double rel_l1(const Field& a, const Field& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += std::abs(a[i] - b[i]);
    den += std::abs(b[i]);
  }
  return num / den;
}

Field mixture(const VelocityGrid& g) {
  Field f = sample_maxwellian({1.0, {1.0, 0.0, 0.0}, -0.25}, g);
  const Field h = sample_maxwellian({0.7, {-0.7, 0.35, 0.0}, -0.5}, g);
  for (std::size_t i = 0; i < f.size(); ++i) f[i] += h[i];
  return f;
}

}  // namespace

TEST_CASE("angular quadrature") {
  const KernelModel k = hard_sphere();
  const AngularQuadrature q = make_angular_quadrature(k, 4, 8, true);
  CHECK(q.size() == 32);
  double s = 0.0;
  for (double w : q.w) s += w;
  CHECK(s == Approx(1.0).epsilon(1e-14));
  for (double z : q.z) CHECK(z > 0.0);
  const AngularQuadrature q2 = make_angular_quadrature(hard_sphere(2), 5, 1, true);
  CHECK(q2.size() == 10);
}

TEST_CASE("orthonormal frame") {
  for (const Vec3& e0 : {Vec3{1, 0, 0}, Vec3{0, 0, 1}, Vec3{0.6, 0.0, 0.8}, Vec3{-0.48, 0.6, 0.64}}) {
    Vec3 e1, e2, f1, f2;
    orthonormal_frame(3, e0, e1, e2);
    auto dot = [](const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; };
    CHECK(std::abs(dot(e0, e1)) < 1e-14);
    CHECK(std::abs(dot(e0, e2)) < 1e-14);
    CHECK(std::abs(dot(e1, e2)) < 1e-14);
    CHECK(dot(e1, e1) == Approx(1.0));
    CHECK(dot(e2, e2) == Approx(1.0));
    orthonormal_frame(3, Vec3{-e0[0], -e0[1], -e0[2]}, f1, f2);
    for (int c = 0; c < 3; ++c) {
      CHECK(f1[c] == Approx(e1[c]));
      CHECK(f2[c] == Approx(-e2[c]));
    }
  }
}

TEST_CASE("loss term and collision frequency") {
  const KernelModel k = hard_sphere();
  const VelocityGrid g = build_grid(3, 4.0, 9);
  const std::size_t i0 = g.flat({3, 5, 4});
  const Vec3 u0 = g.velocity(i0);
  Field f(g);
  f[i0] = 2.0 / g.cell_volume();
  const Field gg = sample_maxwellian({0.5, {0.2, 0, 0}, 0.0}, g);

  SUBCASE("single cell, plain lattice sum") {
    CollisionOperator op(k, g, make_angular_quadrature(k, 4, 8), Interpolation::maxwellian_ratio, false);
    const Field q = op.loss(f, gg);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const Vec3 v = g.velocity(i);
      const double dist = std::sqrt(norm2({v[0] - u0[0], v[1] - u0[1], v[2] - u0[2]}));
      CHECK(q[i] == Approx(2.0 * dist * gg[i]).epsilon(1e-12));
    }
  }
  SUBCASE("single cell, with coincident correction") {
    CollisionOperator op(k, g, make_angular_quadrature(k, 4, 8));
    const Field q = op.loss(f, gg);
    const double self = (lattice_zeta(3, -3.0) - lattice_zeta(3, -1.0)) * g.dx;
    const double nf = 1.0 - lattice_zeta(3, -3.0) / 6.0;
    CHECK(op.coincident_speed() == Approx(self * g.cell_volume()).epsilon(1e-12));
    for (std::size_t i = 0; i < g.size(); ++i) {
      const auto a = g.index(i), b = g.index(i0);
      const int l1 = std::abs(a[0] - b[0]) + std::abs(a[1] - b[1]) + std::abs(a[2] - b[2]);
      const Vec3 v = g.velocity(i);
      const double dist = std::sqrt(norm2({v[0] - u0[0], v[1] - u0[1], v[2] - u0[2]}));
      const double expect = l1 == 0 ? self : (l1 == 1 && dist < 1.5 * g.dx ? nf * dist : dist);
      CHECK(q[i] == Approx(2.0 * expect * gg[i]).epsilon(1e-12));
    }
  }
  SUBCASE("vanishing second argument") {
    CollisionOperator op(k, g, make_angular_quadrature(k, 4, 8));
    const Field q = op.loss(f, Field(g));
    for (double x : q.values) CHECK(x == 0.0);
  }
}

TEST_CASE("collision frequency of a Maxwellian at the origin") {
  // ν(0) = ∫ e^{-r²} r 4π r² dr = 2π
  const KernelModel k = hard_sphere();
  const VelocityGrid g = build_grid(3, 6.0, 21);
  const Field M = sample_maxwellian({1.0, {0, 0, 0}, 0.0}, g);
  const Field nu = collision_frequency(M, k);
  CHECK(nu[g.flat({10, 10, 10})] == Approx(2.0 * M_PI).epsilon(1e-4));
}

TEST_CASE("log-quadratic reference fit") {
  const VelocityGrid g = build_grid(3, 5.0, 9);
  const MaxwellianParams p{0.8, {0.4, -0.2, 0.1}, 0.3};
  const Reference r = fit_reference(sample_maxwellian(p, g));
  REQUIRE(r.active);
  CHECK(r.a == Approx(0.8).epsilon(1e-10));
  const Vec3 o = g.velocity(364);
  for (std::size_t i : {0ul, 100ul, 400ul}) {
    const Vec3 v = g.velocity(i);
    CHECK(r.log_at(v) - r.log_at(o) == Approx(p.log_value(v) - p.log_value(o)).epsilon(1e-10));
  }
  Field neg = sample_maxwellian(p, g);
  neg[5] = -1.0;
  CHECK_FALSE(fit_reference(neg).active);
}

TEST_CASE("sigma-form gain") {
  const KernelModel k = hard_sphere();
  const VelocityGrid g = build_grid(3, 6.0, 9);
  CollisionOperator op(k, g, make_angular_quadrature(k, 4, 8));

  SUBCASE("Maxwellian equilibrium pointwise") {
    const Field M = sample_maxwellian({1.0, {0.3, 0, 0}, 0.0}, g);
    const Field qp = op.gain(M, M), qm = op.loss(M, M);
    double worst = 0.0, top = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      worst = std::max(worst, std::abs(qp[i] - qm[i]));
      top = std::max(top, qm[i]);
    }
    CHECK(worst <= 1e-9 * top);
    CHECK(rel_l1(op.gain_self(M), qp) < 1e-12);
  }
  SUBCASE("bilinearity") {
    const Field f = mixture(g), h = sample_maxwellian({0.9, {0, 0, 0}, 0.0}, g);
    Field f3 = f;
    for (double& x : f3.values) x *= 3.0;
    CHECK(rel_l1(op.gain(f3, h), [&] {
            Field q = op.gain(f, h);
            for (double& x : q.values) x *= 3.0;
            return q;
          }()) < 1e-12);
    CHECK(rel_l1(op.gain(h, f3), [&] {
            Field q = op.gain(h, f);
            for (double& x : q.values) x *= 3.0;
            return q;
          }()) < 1e-12);
  }
  SUBCASE("symmetric self gain equals the general gain") {
    const Field f = mixture(g);
    CHECK(rel_l1(op.gain_self(f), op.gain(f, f)) < 1e-12);
  }
  SUBCASE("co-located point masses stay local") {
    Field f(g);
    f[g.flat({4, 4, 4})] = 1.0;
    const Field q = op.gain(f, f);
    // Energy conservation keeps both post-collision velocities inside |v|² <= 6Δ².
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (norm2(g.velocity(i)) > 6.0 * g.dx * g.dx * (1.0 + 1e-12)) CHECK(q[i] == 0.0);
    }
  }
}

TEST_CASE("gain and loss masses agree before projection") {
  const KernelModel k = hard_sphere();
  const VelocityGrid g = build_grid(3, 6.0, 11);
  CollisionOperator op(k, g, make_angular_quadrature(k, 4, 8));
  const Field f = mixture(g);
  const double mp = total_mass(op.gain_self(f)), mm = total_mass(op.loss(f, f));
  CHECK(mp == Approx(mm).epsilon(0.02));
}

TEST_CASE("two-dimensional operator") {
  const KernelModel k = hard_sphere(2);
  const VelocityGrid g = build_grid(2, 6.0, 21);
  CollisionOperator op(k, g, make_angular_quadrature(k, 8, 1));
  const Field M = sample_maxwellian({1.0, {0, 0, 0}, 0.0}, g);
  CHECK(l1_norm(op.collision(M)) / l1_norm(op.loss(M, M)) < 1e-10);
}

TEST_CASE("Carleman form") {
  const KernelModel k = hard_sphere();
  const VelocityGrid g = build_grid(3, 6.0, 9);
  SUBCASE("zero second argument") {
    const CarlemanResult r = q_plus_carleman(mixture(g), Field(g), k, PlaneQuadrature{});
    for (double x : r.q.values) CHECK(x == 0.0);
  }
  SUBCASE("agrees with the sigma form on a mixture") {
    CollisionOperator op(k, g, make_angular_quadrature(k, 4, 8));
    const Field f = mixture(g);
    const CarlemanResult r = q_plus_carleman(f, f, k, PlaneQuadrature{});
    CHECK(r.skipped == 0);
    CHECK(rel_l1(r.q, op.gain(f, f)) < 0.05);
  }
  SUBCASE("whole plane form converges for the Maxwellian") {
    PlaneQuadrature pq;
    pq.whole_plane = true;
    double prev = 1.0;
    for (int n : {9, 11}) {
      const VelocityGrid gn = build_grid(3, 6.0, n);
      const Field M = sample_maxwellian({1.0, {0, 0, 0}, 0.0}, gn);
      CollisionOperator op(k, gn, make_angular_quadrature(k, 4, 8), Interpolation::maxwellian_ratio, false);
      const double err = rel_l1(q_plus_carleman(M, M, k, pq).q, op.loss(M, M));
      CHECK(err < 0.8 * prev);
      prev = err;
    }
  }
}

TEST_CASE("hard-sphere Carleman kernel against a polar oracle") {
  // K = (2/(π|z|)) ∫_{|w|<=|z|, w ⊥ z} M(v'✳ + w) dw for the folded hard-sphere kernel
  const KernelModel k = hard_sphere();
  const MaxwellianParams M{1.0, {0, 0, 0}, 0.0};
  const Vec3 v{0.3, -0.2, 0.1};
  const Vec3 z{0.6, 0.8, 0.0};
  const Vec3 vps{v[0] + z[0], v[1] + z[1], v[2] + z[2]};
  const Vec3 e1{0.0, 0.0, 1.0}, e2{0.8, -0.6, 0.0};
  const QuadratureRule r = gauss_legendre(40);
  const int nphi = 256;
  double oracle = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    const double t = 0.5 * (r.x[i] + 1.0);
    for (int j = 0; j < nphi; ++j) {
      const double ph = 2.0 * M_PI * j / nphi;
      Vec3 p;
      for (int c = 0; c < 3; ++c) p[c] = vps[c] + t * (std::cos(ph) * e1[c] + std::sin(ph) * e2[c]);
      oracle += 0.5 * r.w[i] * t * (2.0 * M_PI / nphi) * M.value(p);
    }
  }
  oracle *= 2.0 / M_PI;
  PlaneQuadrature pq;
  pq.nr = 10;
  pq.nphi = 24;
  CHECK(carleman_kernel(v, vps, M, k, pq, 1e-6) == Approx(oracle).epsilon(1e-3));
}

TEST_CASE("Carleman kernel bound and symmetry") {
  Rng rng(2024);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (double alpha : {0.0, 1.0}) {
    const KernelModel k = alpha == 0.0 ? hard_sphere() : power(alpha);
    const double a = 0.5;
    const KernelBoundConstants c = kernel_bound_constants(k, a);
    const double eps = std::min(k.beta(), k.epsilon_angular());
    PlaneQuadrature pq;
    pq.nr = 8;
    pq.nphi = 16;
    for (int s = 0; s < 500; ++s) {
      const Vec3 v{u(rng), u(rng), u(rng)};
      Vec3 vps{u(rng), u(rng), u(rng)};
      const double sep = std::sqrt(norm2({vps[0] - v[0], vps[1] - v[1], vps[2] - v[2]}));
      if (sep < 0.05) continue;
      const double K = carleman_kernel(v, vps, {a, {0, 0, 0}, 0.0}, k, pq, 1e-3);
      CHECK(K <= c.total * (1.0 + std::pow(sep, k.beta() - eps)));
      if (sep <= 1.0) CHECK(K <= c.c_profile * c.case_a);
    }
    // Rotation about the z axis by 90 degrees.
    const Vec3 v{0.4, 1.1, -0.3}, w{-0.9, 0.2, 0.5};
    const double K1 = carleman_kernel(v, w, {a, {0, 0, 0}, 0.0}, k, pq, 1e-3);
    const double K2 = carleman_kernel({-v[1], v[0], v[2]}, {-w[1], w[0], w[2]}, {a, {0, 0, 0}, 0.0}, k, pq, 1e-3);
    CHECK(K1 == Approx(K2).epsilon(1e-10));
  }
}

TEST_CASE("half-angle geometry on the Carleman disk") {
  Rng rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int s = 0; s < 200; ++s) {
    const Vec3 v{u(rng), u(rng), u(rng)};
    const Vec3 z{u(rng), u(rng), u(rng)};
    const double zl = std::sqrt(norm2(z));
    const Vec3 e0{z[0] / zl, z[1] / zl, z[2] / zl};
    Vec3 e1, e2;
    orthonormal_frame(3, e0, e1, e2);
    const double t = 0.5 * (u(rng) + 1.0), ph = M_PI * u(rng);
    Vec3 vps, vp, vs;
    for (int c = 0; c < 3; ++c) {
      vps[c] = v[c] + z[c];
      vp[c] = v[c] + zl * t * (std::cos(ph) * e1[c] + std::sin(ph) * e2[c]);
      vs[c] = vps[c] + vp[c] - v[c];
    }
    const Vec3 rel{v[0] - vs[0], v[1] - vs[1], v[2] - vs[2]};
    const Vec3 sd{vp[0] - vps[0], vp[1] - vps[1], vp[2] - vps[2]};
    const double cth = (rel[0] * sd[0] + rel[1] * sd[1] + rel[2] * sd[2]) / std::sqrt(norm2(rel) * norm2(sd));
    const double th = std::acos(std::clamp(cth, -1.0, 1.0));
    const double rhs = std::sqrt(norm2({vps[0] - vs[0], vps[1] - vs[1], vps[2] - vs[2]})) / zl;
    CHECK(std::tan(0.5 * th) == Approx(rhs).epsilon(1e-10));
  }
}

TEST_CASE("conservation projection") {
  const VelocityGrid g = build_grid(3, 5.0, 9);
  Rng rng(3);
  const Field w = random_nonnegative_field(g, rng);
  const Field q = random_signed_field(g, rng);
  const Field p = project_conserved(q, w);
  double m = 0.0, e = 0.0, sc = 0.0;
  Vec3 mom{0, 0, 0};
  for (std::size_t i = 0; i < p.size(); ++i) {
    const Vec3 v = g.velocity(i);
    m += p[i];
    e += p[i] * norm2(v);
    for (int c = 0; c < 3; ++c) mom[c] += p[i] * v[c];
    sc += std::abs(q[i]) * (1.0 + norm2(v));
  }
  CHECK(std::abs(m) < 1e-13 * sc);
  CHECK(std::abs(e) < 1e-13 * sc);
  for (int c = 0; c < 3; ++c) CHECK(std::abs(mom[c]) < 1e-13 * sc);
  CHECK_THROWS(project_conserved(q, Field(g)));
}

TEST_CASE("weighted gain bound") {
  const KernelModel k = hard_sphere();
  const VelocityGrid g = build_grid(3, 5.0, 9);
  CollisionOperator op(k, g, make_angular_quadrature(k, 4, 8));
  const MaxwellianParams M{1.0, {0, 0, 0}, 0.0};
  const GainBoundReport z = verify_weighted_gain_bound(Field(g), M, op);
  CHECK(z.lhs == 0.0);
  CHECK(z.rhs == 0.0);
  CHECK(z.holds);
  const GainBoundReport r = verify_weighted_gain_bound(sample_maxwellian({2.0, {0, 0, 0}, 0.0}, g), M, op);
  CHECK(r.holds);
  CHECK(r.margin > 0.0);
  CHECK_THROWS(verify_weighted_gain_bound(Field(g), {1.0, {0.1, 0, 0}, 0.0}, op));
}

TEST_CASE("kernel bound constants") {
  for (double alpha : {0.0, 1.0, 1.5}) {
    const KernelBoundConstants c = kernel_bound_constants(power(alpha), 1.0);
    const double e = 2.0 - alpha;
    CHECK(c.case_a * e / std::pow(2.0, e) == Approx((1.0 + std::sqrt(2.0)) * 2.0 * M_PI).epsilon(1e-12));
  }
  CHECK(kernel_bound_constants(power(1.5), 1.0).case_a > kernel_bound_constants(power(1.0), 1.0).case_a);
  const KernelBoundConstants hs = kernel_bound_constants(hard_sphere(), 1.0);
  CHECK(hs.c_profile == Approx(1.0 / (2.0 * M_PI)).epsilon(1e-12));
  CHECK(hs.total == Approx(hs.c_profile * std::max(hs.case_a, hs.case_b)));
}

TEST_CASE("dissipativity functional") {
  const KernelModel k = hard_sphere();
  const VelocityGrid g = build_grid(3, 6.0, 9);
  CollisionOperator op(k, g, make_angular_quadrature(k, 4, 8));
  const Field M = sample_maxwellian({1.0, {0, 0, 0}, 0.0}, g);
  SUBCASE("zero f") {
    Rng rng(1);
    const DissipativityValue d = dissipativity_functional(Field(g), random_signed_field(g, rng), op);
    CHECK(d.sign_form == 0.0);
  }
  SUBCASE("nonnegative u reduces to the mass of the linear operator") {
    const Field u = sample_maxwellian({0.8, {0, 0, 0}, 0.0}, g);
    const DissipativityValue d = dissipativity_functional(M, u, op);
    CHECK(std::abs(d.sign_form) <= 0.05 * d.scale);
    CHECK(d.sign_form <= 1e-8 * d.scale);
  }
  SUBCASE("sign-changing perturbations of a Maxwellian") {
    Rng rng(77);
    for (int s = 0; s < 20; ++s) {
      Field u = random_nonnegative_field(g, rng);
      for (std::size_t i = 0; i < u.size(); ++i) u[i] -= M[i];
      const DissipativityValue d = dissipativity_functional(M, u, op);
      CHECK(d.sign_form <= 1e-8 * d.scale);
      CHECK(d.half_form <= 1e-8 * d.scale);
    }
  }
  CHECK_THROWS(dissipativity_functional(M, M, op, 2.0));
}

TEST_CASE("Hoelder estimate") {
  const KernelModel k = hard_sphere();
  const VelocityGrid g = build_grid(3, 6.0, 9);
  CollisionOperator op(k, g, make_angular_quadrature(k, 4, 8));
  const Field f = sample_maxwellian({1.0, {0, 0, 0}, 0.0}, g);
  const HolderGap same = holder_gap(f, f, 0.0, 2.0, op);
  CHECK(same.lhs == 0.0);
  CHECK(same.rhs == 0.0);
  CHECK(same.holds);
  Field g1 = f;
  for (double& x : g1.values) x *= 1.1;
  const HolderGap scaled = holder_gap(f, g1, 0.0, 2.0, op);
  CHECK(scaled.holds);
  CHECK(scaled.rhs > scaled.lhs);
  Field g2 = f;
  g2[g.flat({8, 8, 7})] += 0.01;
  g2[g.flat({0, 1, 0})] += 0.02;
  CHECK(holder_gap(f, g2, 0.0, 2.0, op).holds);
  CHECK_THROWS(holder_gap(f, g2, 2.0, 2.0, op));
}

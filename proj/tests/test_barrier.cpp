#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "boltz/barrier.hpp"

using namespace boltz;
using doctest::Approx;

namespace {

KernelModel hard_sphere() { return normalize_kernel(KernelSpec{}); }

BarrierInputs reference_inputs() {
  BarrierInputs in;
  in.a1 = 0.75;
  in.C1 = 25.0;
  in.rho0 = 2.5;
  in.C0 = 0.55;
  in.a = 0.5;
  return in;
}

}  // namespace

TEST_CASE("L") {
  CHECK(compute_L(0.5, 0.0, 1.0) == Approx(0.606531).epsilon(1e-6));
  CHECK(compute_L(1.0, 0.0, 1.0) == Approx(0.428882).epsilon(1e-6));
  CHECK(compute_L(0.5, 1.0, 1.0) == Approx(std::exp(1.0) * compute_L(0.5, 0.0, 1.0)).epsilon(1e-14));
  for (double beta : {0.3, 0.7, 1.0}) {
    for (double a1 : {0.2, 0.75, 3.0}) CHECK(compute_L_search(a1, 0.2, beta) == Approx(compute_L(a1, 0.2, beta)).epsilon(1e-8));
  }
  CHECK_THROWS_AS(compute_L(0.0, 0.0, 1.0), std::invalid_argument);
}

TEST_CASE("R") {
  CHECK(compute_R(1.0, 1.0, 1.0, 1.0, 1.0) == Approx(3.0).epsilon(1e-14));
  CHECK(compute_R(1.0, 0.0, 1.0, 1.0, 0.5) == Approx(0.5 * (3.0 + std::sqrt(5.0))).epsilon(1e-12));
  CHECK(compute_R(1.0, 0.0, 1.0, 1.0, 0.5) == Approx(2.618034).epsilon(1e-6));

  for (double beta : {0.4, 1.0}) {
    for (double eps : {0.1 * beta, 0.5 * beta, beta}) {
      for (double rho0 : {0.1, 1.0, 5.0}) {
        const double R = compute_R(3.0, 0.7, rho0, beta, eps);
        CHECK(std::abs(r_equation_residual(R, 3.0, 0.7, rho0, beta, eps)) <= 1e-10);
        CHECK(compute_R(3.0, 0.7, 2.0 * rho0, beta, eps) < R);
      }
    }
  }
  CHECK_THROWS_AS(compute_R(1.0, 1.0, 0.0, 1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(compute_R(1.0, 1.0, 1.0, 1.0, 1.5), std::invalid_argument);
  CHECK_THROWS_AS(compute_R(0.0, 0.0, 1.0, 1.0, 1.0), std::invalid_argument);
}

TEST_CASE("barrier certificate") {
  const KernelModel k = hard_sphere();

  SUBCASE("offset arithmetic") {
    CHECK(0.25 * 3.0 * 3.0 + std::log(2.0) == Approx(2.9431).epsilon(1e-4));
    const BarrierCertificate c = build_barrier(reference_inputs(), k);
    CHECK(c.log_c0_term == Approx(c.inputs.a * c.R * c.R + std::log(c.inputs.C0)).epsilon(1e-14));
    CHECK(c.c == std::max(c.log_c0_term, c.inputs.c0));
  }
  SUBCASE("carries every factor") {
    const BarrierCertificate c = build_barrier(reference_inputs(), k);
    CHECK(c.eps == 1.0);
    CHECK(c.lambda == 2.0);
    CHECK(c.L == Approx(compute_L(0.75, 0.0, 1.0)));
    CHECK(c.C == Approx(c.kernel_constants.total * 25.0 * 2.0).epsilon(1e-14));
    CHECK(std::abs(r_equation_residual(c.R, c.C, c.L * 25.0, 2.5, 1.0, 1.0)) <= 1e-10);
    CHECK(c.R > 0.0);
    CHECK(std::isfinite(c.c));
  }
  SUBCASE("monotone in rho0 and C0") {
    BarrierInputs in = reference_inputs();
    const BarrierCertificate base = build_barrier(in, k);
    in.rho0 *= 2.0;
    const BarrierCertificate denser = build_barrier(in, k);
    CHECK(denser.R <= base.R);
    CHECK(denser.c <= base.c);
    in = reference_inputs();
    in.C0 *= 3.0;
    CHECK(build_barrier(in, k).c > base.c);
  }
  SUBCASE("ordering") {
    BarrierInputs in = reference_inputs();
    in.a = 0.8;
    CHECK_THROWS_AS(build_barrier(in, k), std::invalid_argument);
    in = reference_inputs();
    in.a1 = 1.2;
    CHECK_THROWS_AS(build_barrier(in, k), std::invalid_argument);
    in = reference_inputs();
    in.rho0 = 0.0;
    CHECK_THROWS_AS(build_barrier(in, k), std::invalid_argument);
  }
}

TEST_CASE("barrier inequality") {
  const KernelModel k = hard_sphere();
  const VelocityGrid g = build_grid(3, 6.0, 9);
  CollisionOperator op(k, g, make_angular_quadrature(k, 4, 8));
  const BarrierCertificate cert = build_barrier(reference_inputs(), k);

  SUBCASE("half Maxwellian") {
    Field f = sample_maxwellian({1.0, {0, 0, 0}, 0.0}, g);
    for (double& x : f.values) x *= 0.5;
    const BarrierCheck r = check_barrier_inequality(f, cert, op);
    CHECK(r.applicable);
    CHECK(r.in_ball);
    CHECK(r.tail.pass);
    CHECK(r.pass);
    CHECK(r.c_observed > 0.0);
    CHECK(r.r_observed < cert.R);
    CHECK(r.tail_observed.cells > 0);
    CHECK(r.tail_observed.pass);
  }
  SUBCASE("zero field") {
    const BarrierCheck r = check_barrier_inequality(Field(g), cert, op);
    CHECK_FALSE(r.hypotheses.density_ok);
    CHECK_FALSE(r.applicable);
    CHECK(r.tail.pass);
    CHECK(r.tail.failures == 0);
    CHECK(r.note == "density below rho0");
  }
  SUBCASE("offset below the in-ball level") {
    BarrierCertificate low = cert;
    low.c = low.log_c0_term - 1.0;
    Field f = sample_maxwellian({1.0, {0, 0, 0}, 0.0}, g);
    for (double& x : f.values) x *= 0.5;
    const BarrierCheck r = check_barrier_inequality(f, low, op);
    CHECK_FALSE(r.in_ball);
    CHECK_FALSE(r.pass);
  }
}

TEST_CASE("linear order preservation") {
  const KernelModel k = hard_sphere();
  const VelocityGrid g = build_grid(3, 6.0, 9);
  CollisionOperator op(k, g, make_angular_quadrature(k, 4, 8));
  const Field f = sample_maxwellian({1.0, {0, 0, 0}, 0.0}, g);
  const Field nu = op.frequency(f);
  double numax = 0.0;
  for (double x : nu.values) numax = std::max(numax, x);

  SUBCASE("zero stays zero") {
    const LinearOrderVerdict v = evolve_linear_order_check(f, Field(g), 0.5 / numax, 10, op);
    CHECK(v.pass);
    CHECK(v.worst_positive == 0.0);
  }
  SUBCASE("negative Maxwellian") {
    Field u0 = sample_maxwellian({0.8, {0, 0, 0}, 0.0}, g);
    for (double& x : u0.values) x = -x;
    const LinearOrderVerdict v = evolve_linear_order_check(f, u0, 0.9 / numax, 50, op);
    CHECK(v.steps == 50);
    CHECK(v.pass);
    CHECK(v.worst_positive <= 1e-12);
    CHECK(v.worst_mass_drift <= 1e-12);
  }
  SUBCASE("unprojected evolution keeps the sign") {
    Field u0 = sample_maxwellian({0.8, {0.5, 0, 0}, 0.0}, g);
    for (double& x : u0.values) x = -x;
    CHECK(evolve_linear_order_check(f, u0, 0.9 / numax, 20, op, false).pass);
  }
  SUBCASE("step guard") {
    CHECK_THROWS_AS(evolve_linear_order_check(f, Field(g), 1.5 / numax, 1, op), std::invalid_argument);
    Field pos(g, 0.0);
    pos[3] = 1.0;
    CHECK_THROWS_AS(evolve_linear_order_check(f, pos, 0.5 / numax, 1, op), std::invalid_argument);
  }
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "boltz/fields.hpp"
#include "boltz/special.hpp"

using namespace boltz;
using doctest::Approx;

TEST_CASE("grid construction") {
  const VelocityGrid g2 = build_grid(2, 1.0, 2);
  CHECK(g2.coord(0) == Approx(-0.5));
  CHECK(g2.coord(1) == Approx(0.5));
  const VelocityGrid g3 = build_grid(3, 6.0, 9);
  CHECK(g3.dx == Approx(4.0 / 3.0));
  CHECK(g3.cell_volume() * g3.size() == Approx(std::pow(12.0, 3)).epsilon(1e-13));
  for (std::size_t i : {0ul, 17ul, 300ul, 728ul}) CHECK(g3.flat(g3.index(i)) == i);
  CHECK_THROWS(build_grid(4, 1.0, 4));
  CHECK_THROWS(build_grid(3, 1.0, 300, 1000));
}

TEST_CASE("Maxwellian sampling") {
  const VelocityGrid g = build_grid(3, 6.0, 31);
  const Field M = sample_maxwellian({1.0, {0, 0, 0}, 0.0}, g);
  CHECK(total_mass(M) == Approx(std::pow(M_PI, 1.5)).epsilon(1e-6));
  const std::size_t centre = g.flat({15, 15, 15});
  for (std::size_t i = 0; i < M.size(); ++i) CHECK(M[i] <= M[centre]);
  const Field Me = sample_maxwellian({1.0, {0, 0, 0}, 1.0}, g);
  for (std::size_t i : {0ul, 100ul, centre}) CHECK(Me[i] == Approx(std::exp(1.0) * M[i]).epsilon(1e-14));
}

TEST_CASE("moments") {
  const VelocityGrid g = build_grid(3, 6.0, 31);
  SUBCASE("single cell") {
    Field f(g);
    const std::size_t i = g.flat({3, 20, 9});
    f[i] = 2.0 / g.cell_volume();
    const double r2 = norm2(g.velocity(i));
    for (double k : {0.0, 0.5, 1.0, 2.7}) CHECK(moment(f, k) == Approx(2.0 * std::pow(r2, k)).epsilon(1e-13));
  }
  SUBCASE("Gaussian moments") {
    const Field M = sample_maxwellian({1.0, {0, 0, 0}, 0.0}, g);
    CHECK(moment(M, 1.0) == Approx(1.5 * std::pow(M_PI, 1.5)).epsilon(1e-5));
    for (int k = 0; k <= 6; ++k) {
      const double exact = std::pow(M_PI, 1.5) * gamma_fn(k + 1.5) / gamma_fn(1.5);
      CHECK(moment(M, k) == Approx(exact).epsilon(1e-5));
    }
    const Field Ma = sample_maxwellian({2.0, {0, 0, 0}, 0.0}, g);
    for (int k = 0; k <= 6; ++k) {
      const double exact = std::pow(M_PI / 2.0, 1.5) * gamma_fn(k + 1.5) / gamma_fn(1.5) * std::pow(2.0, -k);
      CHECK(moment(Ma, k) == Approx(exact).epsilon(1e-5));
    }
  }
  SUBCASE("mass is stable under refinement") {
    const double m1 = total_mass(sample_maxwellian({1.0, {0, 0, 0}, 0.0}, build_grid(3, 6.0, 41)));
    const double m2 = total_mass(sample_maxwellian({1.0, {0, 0, 0}, 0.0}, build_grid(3, 6.0, 61)));
    CHECK(m1 == Approx(m2).epsilon(1e-6));
  }
  SUBCASE("homogeneity and monotonicity") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const VelocityGrid gc = build_grid(3, 4.0, 9);
    Field f(gc), h(gc);
    for (std::size_t i = 0; i < f.size(); ++i) {
      f[i] = u(rng);
      h[i] = f[i] + u(rng);
    }
    Field f3 = f;
    for (double& x : f3.values) x *= 3.0;
    const auto ks = index_set(1.0, 4.0);
    const MomentLedger a = normalized_moments(f, ks, 0.5), b = normalized_moments(f3, ks, 0.5);
    for (std::size_t i = 0; i < ks.size(); ++i) {
      CHECK(b.m[i] == Approx(3.0 * a.m[i]).epsilon(1e-13));
      CHECK(b.z[i] == Approx(3.0 * a.z[i]).epsilon(1e-13));
      CHECK(moment(h, ks[i]) >= a.m[i]);
    }
  }
}

TEST_CASE("index set and normalized moments") {
  const auto J = index_set(1.0, 3.0);
  REQUIRE(J.size() == 7);
  for (int i = 0; i < 7; ++i) CHECK(J[i] == Approx(0.5 * i));
  const auto J2 = index_set(0.5, 2.0);
  CHECK(J2.size() == 9);
  const VelocityGrid g = build_grid(3, 6.0, 15);
  const Field M = sample_maxwellian({1.0, {0, 0, 0}, 0.0}, g);
  const MomentLedger led = normalized_moments(M, {0.0, 1.0, 2.0, 3.0}, 1.0);
  CHECK(led.z_at(3.0) == Approx(led.m_at(3.0) / 6.0).epsilon(1e-14));
  CHECK(led.z_at(0.0) == Approx(led.m_at(0.0)).epsilon(1e-14));
  const MomentLedger l2 = normalized_moments(M, {0.0}, 0.25);
  CHECK(l2.z[0] == Approx(l2.m[0] / gamma_fn(0.25)).epsilon(1e-14));
  CHECK(led.find(1.5) == -1);
  // Stirling: Γ(k+b) / (k^{b-1} Γ(k+1)) → 1
  const double k = 200.0, b = 0.3;
  CHECK(std::exp(log_gamma(k + b) - (b - 1.0) * std::log(k) - log_gamma(k + 1.0)) == Approx(1.0).epsilon(0.01));
}

TEST_CASE("weighted ratio integral") {
  const VelocityGrid g = build_grid(3, 6.0, 31);
  const MaxwellianParams M{0.7, {0, 0, 0}, 0.2};
  const Field fM = sample_maxwellian(M, g);
  CHECK(weighted_ratio_integral(fM, M, RatioWeight::one).value == Approx(std::pow(12.0, 3)).epsilon(1e-12));
  const VelocityGrid gf = build_grid(3, 8.0, 41);
  const Field M0 = sample_maxwellian({1.0, {0, 0, 0}, 0.0}, gf);
  const WeightedRatio r = weighted_ratio_integral(M0, {0.5, {0, 0, 0}, 0.0}, RatioWeight::one);
  CHECK(r.value == Approx(std::pow(2.0 * M_PI, 1.5)).epsilon(1e-5));
  REQUIRE(r.partial_sums.size() == 13);
  CHECK(r.partial_sums.back() == Approx(r.value).epsilon(0.01));
  CHECK(weighted_ratio_integral(M0, {0.5, {0, 0, 0}, 0.0}, RatioWeight::w_eps, 0.0).value == Approx(2.0 * r.value));
}

TEST_CASE("moment interpolation chain") {
  const VelocityGrid g = build_grid(3, 6.0, 15);
  SUBCASE("single radius gives equality") {
    Field f(g);
    f[g.flat({2, 7, 11})] = 1.0;
    const auto m = verify_moment_interpolation(f, 1.0, 2.0, 3.0);
    CHECK(std::abs(m.lower_slack) < 1e-12);
    CHECK(std::abs(m.upper_slack) < 1e-12);
    CHECK(m.holds);
  }
  SUBCASE("Maxwellian gives strict inequalities") {
    const auto m = verify_moment_interpolation(sample_maxwellian({1.0, {0, 0, 0}, 0.0}, g), 1.0, 2.0, 3.0);
    CHECK(m.lower_slack > 1e-3);
    CHECK(m.upper_slack > 1e-3);
  }
  SUBCASE("random nonnegative fields") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 20; ++t) {
      Field f(g);
      for (double& x : f.values) x = u(rng) < 0.3 ? u(rng) : 0.0;
      const double k1 = 0.25 + u(rng), k = k1 + u(rng), k2 = k + u(rng);
      CHECK(verify_moment_interpolation(f, k1, k, k2).holds);
    }
  }
}

TEST_CASE("binary field container round trip") {
  const VelocityGrid g = build_grid(2, 3.0, 7);
  Field f(g);
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = std::sin(0.3 * i) * 1e-3;
  write_field_binary(f, "/tmp/boltz_rt.bin");
  const Field h = read_field_binary("/tmp/boltz_rt.bin");
  CHECK(h.grid == g);
  for (std::size_t i = 0; i < f.size(); ++i) CHECK(h[i] == f[i]);
  CHECK_THROWS(read_field_binary("/tmp/does_not_exist.bin"));
}

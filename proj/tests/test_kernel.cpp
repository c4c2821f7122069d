#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "boltz/kernel.hpp"
#include "boltz/special.hpp"

using namespace boltz;
using doctest::Approx;

namespace {

KernelModel isotropic(int d, double beta = 1.0) {
  KernelSpec s;
  s.d = d;
  s.beta = beta;
  return normalize_kernel(s);
}

KernelModel power(int d, double alpha, double beta = 1.0) {
  KernelSpec s;
  s.d = d;
  s.beta = beta;
  s.profile = ProfileKind::power_singular;
  s.alpha = alpha;
  return normalize_kernel(s);
}

std::string write_table(const char* name, double (*fn)(double), int n) {
  const std::string path = std::string("/tmp/") + name;
  std::ofstream out(path);
  out << "z,h\n";
  for (int i = 0; i < n; ++i) {
    const double z = -1.0 + 2.0 * i / (n - 1);
    out << z << ',' << fn(z) << '\n';
  }
  return path;
}

}  // namespace

TEST_CASE("isotropic normalization") {
  CHECK(isotropic(3).h(0.3) == Approx(1.0 / (4.0 * M_PI)).epsilon(1e-13));
  CHECK(isotropic(2).h(-0.7) == Approx(1.0 / (2.0 * M_PI)).epsilon(1e-13));
  CHECK(std::abs(isotropic(3).normalization_defect()) < 1e-10);
  CHECK(std::abs(isotropic(2).normalization_defect()) < 1e-10);
}

TEST_CASE("power-singular amplitude matches the beta-function normalization") {
  const KernelModel m = power(3, 0.5);
  // ∫(1-z²)^{-1/4} dz = B(1/2, 3/4) after z = 2s - 1
  const double integral = std::pow(2.0, 0.5) * std::exp(log_beta(0.75, 0.75));
  CHECK(m.amplitude() == Approx(1.0 / (2.0 * M_PI * integral)).epsilon(1e-10));
  CHECK(std::abs(m.normalization_defect()) < 1e-6);
  CHECK(m.epsilon_angular() == Approx(1.5));
}

TEST_CASE("kernel evaluation") {
  const KernelModel hs = isotropic(3);
  const Vec3 u{0.0, 0.0, 2.0};
  const Vec3 up{0.0, 0.6, 0.8};
  const Vec3 down{0.0, 0.6, -0.8};
  CHECK(eval_kernel(hs, u, up, true) == Approx(2.0 / (2.0 * M_PI)).epsilon(1e-13));
  CHECK(eval_kernel(hs, u, down, true) == 0.0);
  CHECK(eval_kernel(hs, u, down, false) == Approx(2.0 / (4.0 * M_PI)).epsilon(1e-13));
  CHECK(eval_kernel(hs, Vec3{0.0, 0.0, 0.0}, up, true) == 0.0);
  CHECK(eval_kernel(power(3, 1.0), Vec3{0, 0, 0}, up, false) == 0.0);
  CHECK_THROWS(eval_kernel(hs, u, Vec3{0.0, 0.0, 2.0}, true));
}

TEST_CASE("a_k values") {
  const KernelModel hs = isotropic(3);
  CHECK(compute_ak(hs, 2.0) == Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(compute_ak(hs, 1.0) == Approx(1.0).epsilon(1e-12));
  CHECK(compute_ak(power(3, 1.0), 0.0) == Approx(2.0).epsilon(1e-10));
  CHECK(compute_ak(isotropic(2), 0.0) == Approx(2.0).epsilon(1e-10));
  CHECK(compute_ak(isotropic(2), 1.0) == Approx(1.0).epsilon(1e-10));
  for (int k = 0; k <= 50; ++k) CHECK(std::abs(compute_ak(hs, k) - 2.0 / (k + 1.0)) <= 1e-10);
}

TEST_CASE("a_k for alpha = 1 against the central binomial oracle") {
  // h ∝ (1-z²)^{-1/2}: ∫₀^π cos^{2k}(θ/2) dθ = π C(2k,k)/4^k, so a_k = 2 C(2k,k) / 4^k.
  const KernelModel m = power(3, 1.0);
  for (int k = 1; k <= 12; ++k) {
    const double oracle = 2.0 * std::exp(log_gamma(2.0 * k + 1.0) - 2.0 * log_gamma(k + 1.0)) / std::pow(4.0, k);
    CHECK(compute_ak(m, k) == Approx(oracle).epsilon(1e-10));
  }
}

TEST_CASE("a_k is decreasing") {
  for (const KernelModel& m : {isotropic(3), power(3, 0.5), power(3, 1.5), isotropic(2)}) {
    double prev = compute_ak(m, 0.0);
    for (double k = 0.25; k <= 20.0; k += 0.25) {
      const double cur = compute_ak(m, k);
      CHECK(cur < prev);
      prev = cur;
    }
  }
}

TEST_CASE("beta-function identity for power profiles") {
  for (double alpha : {0.0, 0.5, 1.0, 1.5}) {
    const KernelModel m = power(3, alpha);
    for (double k : {0.5, 1.0, 3.7, 10.0, 40.0}) {
      CHECK(compute_ak(m, k) == Approx(ak_closed_form(m, k)).epsilon(1e-8));
    }
  }
}

TEST_CASE("a_k decay exponent") {
  CHECK(fit_ak_exponent(isotropic(3), 50.0, 500.0) == Approx(-1.0).epsilon(0.02));
  CHECK(fit_ak_exponent(power(3, 0.0), 50.0, 500.0) == Approx(fit_ak_exponent(isotropic(3), 50.0, 500.0)).epsilon(1e-12));
  CHECK(std::abs(fit_ak_exponent(power(3, 1.0), 50.0, 500.0) + 0.5) <= 0.05);
  CHECK_THROWS(fit_ak_exponent(isotropic(3), 5.0, 500.0));
}

TEST_CASE("tabulated profiles") {
  SUBCASE("smooth even profile is normalized and matches direct integration") {
    KernelSpec s;
    s.profile = ProfileKind::table;
    load_profile_table(write_table("boltz_table_even.csv", [](double z) { return 1.0 + 0.5 * z * z; }, 41), s);
    const KernelModel m = normalize_kernel(s);
    CHECK(std::abs(m.normalization_defect()) < 1e-10);
    // ∫(1 + z²/2) dz = 7/3 ⇒ amplitude 3/(14π)
    CHECK(m.h(0.0) == Approx(3.0 / (14.0 * M_PI)).epsilon(1e-6));
    CHECK(compute_ak(m, 1.0) == Approx(1.0).epsilon(1e-6));
    CHECK(std::isnan(ak_closed_form(m, 1.0)));
  }
  SUBCASE("decreasing symmetrization is rejected") {
    KernelSpec s;
    s.profile = ProfileKind::table;
    load_profile_table(write_table("boltz_table_bad.csv", [](double z) { return 1.5 - z * z; }, 21), s);
    CHECK_THROWS_WITH_AS(normalize_kernel(s), doctest::Contains("nondecreasing"), std::invalid_argument);
  }
}

TEST_CASE("parameter validation") {
  KernelSpec s;
  s.beta = 1.5;
  CHECK_THROWS_WITH(normalize_kernel(s), "beta must lie in (0,1]");
  s.beta = 1.0;
  s.profile = ProfileKind::power_singular;
  s.alpha = 2.0;
  CHECK_THROWS_WITH(normalize_kernel(s), "alpha < d-1 required");
  s.alpha = 0.0;
  s.amplitude = 0.1;
  CHECK_THROWS_AS(normalize_kernel(s), std::invalid_argument);
  s.amplitude = 1.0 / (4.0 * M_PI);
  CHECK_NOTHROW(normalize_kernel(s));
  CHECK(profile_from_string("isotropic") == ProfileKind::isotropic);
  CHECK_THROWS(profile_from_string("gaussian"));
}

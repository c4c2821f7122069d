#pragma once

#include <map>
#include <string>
#include <vector>

#include "boltz/collision.hpp"
#include "boltz/fields.hpp"
#include "boltz/kernel.hpp"

namespace boltz {

struct GainAverage {
  double g = 0.0;      // ½∫(Ψ(|v'✳|²)+Ψ(|v'|²)) h dσ
  double bound = 0.0;  // ω∫Ψ(E(1+z)/2) h̄ (1-z²)^{(d-3)/2} dz = ½ a_k E^k
  bool holds = false;
};

// Ψ(x) = x^k; full-sphere rule (folded = false).
GainAverage gain_average_bound(const Vec3& v, const Vec3& vs, const KernelModel& kernel, double k,
                               const AngularQuadrature& full);

struct PovznerTerms {
  double s = 0.0;
  double z = 0.0;
  double gamma_factor = 0.0;  // Γ(k+β/2+2b)
  double ratio = 0.0;         // S_k / (Γ(k+β/2+2b) Z_k)
};

// Requires every m_{j+β/2}, m_{k-j}, m_j, m_{k-j+β/2} for 1 <= j <= [(k+1)/2] in the ledger.
PovznerTerms povzner_terms(double k, double beta, const MomentLedger& ledger);

// m_k = m₀ Γ(k+d/2)/Γ(d/2) a^{-k} of m₀ (a/π)^{d/2} e^{-a|v|²}.
MomentLedger maxwellian_ledger(int d, double a, double m0, const std::vector<double>& ks, double b_norm);

// 1.05 × the largest S_k/(Γ(k+β/2+2b) Z_k) over k ∈ J ∩ [1, 2 k_max] and every ledger.
double calibrate_cb(double beta, const std::vector<MomentLedger>& sweep, double k_max);

// c_α from the lower-moment recursion, keyed by α. Always contains α = 1 with c₁ = 1.
std::map<double, double> lower_moment_constants(const KernelModel& kernel);
double lower_moment_constant(const std::map<double, double>& table, double alpha);

struct MomentSystemConstants {
  double beta = 1.0;
  double eps = 2.0;       // d-1-α
  double b_norm = 0.5;
  double c_b = 0.0;
  double c_nu = 0.0;      // c_{β/2}
  double nu_min_ratio = 0.0;  // min_v ν_{f0}(v)/(1+|v|^β)
  double nu0 = 0.0;
  double m0 = 0.0;
  double k_star = 0.0;
  std::vector<double> k;  // J ∩ [0, k_max]
  std::vector<double> a;
  std::vector<double> big_a;
  std::vector<double> big_b;
  double a_bar = 0.0;
  double b_bar = 0.0;
  double c0 = 0.0;

  int find(double kv) const;
};

struct SystemOptions {
  double b_norm = 0.0;  // 0 selects ε/4
  double k_max = 8.0;
  double c_b = 0.0;     // 0 selects calibration against Maxwellian and f0 ledgers
};

MomentSystemConstants system_constants(const KernelModel& kernel, const Field& f0, const CollisionOperator& op,
                                       const SystemOptions& opts = {});

struct BernoulliCap {
  double z_star = 0.0;
  double cap = 0.0;
  bool ratio_condition = false;  // A/B >= C^{1-β/2k}
  bool below_geometric = false;  // z✳ <= C q^k
};

BernoulliCap bernoulli_cap(double A, double B, double C, double q, double k, double beta, double z0);

struct GrowthConstants {
  double c = 0.0;
  double q = 0.0;
};

GrowthConstants growth_constants(const MomentSystemConstants& sys, const MomentLedger& initial, double k_limit);

struct MomentSeries {
  std::vector<double> t;
  std::vector<MomentLedger> ledgers;
};

struct GrowthVerdict {
  double k = 0.0;
  bool pass = true;
  bool ratio_condition = true;
  double worst_slack = 0.0;  // max of z' - (-A z^{1+β/2k} + B Z) - tol over the series
  double worst_bound = 0.0;  // max z_k(t) / (C q^k)
};

struct GrowthCertificate {
  double c = 0.0;
  double q = 0.0;
  bool pass = false;
  std::vector<GrowthVerdict> per_k;
  bool failed = false;
  double fail_k = 0.0;
  double fail_t = 0.0;
  std::string fail_reason;
};

GrowthCertificate verify_geometric_bound(const MomentSeries& series, const MomentSystemConstants& sys, double C,
                                         double q, double k_limit);

struct LowerMomentVerdict {
  double alpha = 0.0;
  double c_alpha = 0.0;
  double worst_ratio = 0.0;  // min_t m_α(t) / m_α(0)
  bool pass = false;
};

// m_α(t) >= c_α m_α(0) along the series for every α of the table present in the ledgers.
std::vector<LowerMomentVerdict> verify_lower_moments(const MomentSeries& series, const std::map<double, double>& table);

double coefficient_a_k(double ak, double nu0, double m0, double k, double beta, double b_norm);
double coefficient_b_k(double ak, double c_b, double k, double beta, double b_norm);

struct BernoulliTrajectory {
  double z_max = 0.0;
  double z_end = 0.0;
};

// Adaptive integration of z' = -A z^{1+β/2k} + S on [0, t_end].
BernoulliTrajectory integrate_bernoulli(double A, double S, double k, double beta, double z0, double t_end);

}  // namespace boltz

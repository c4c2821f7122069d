#pragma once

#include "boltz/collision.hpp"

namespace boltz {

// w_ε(v) = 1 + |v|^{β-ε}, ε = min{β, d-1-α}.
struct WeightFunction {
  double beta = 1.0;
  double eps = 1.0;

  double operator()(const Vec3& v) const;
};

WeightFunction make_weight_function(const KernelModel& kernel);

// Factors of the kernel bound K(v, v'✳) <= C_K (1 + |v - v'✳|^{β-ε}) for M = e^{-a|v|²}.
struct KernelBoundConstants {
  double a = 0.0;
  double eps = 0.0;
  double c_profile = 0.0;  // sup 2h̄(z)(1-z²)^{α/2}
  double case_a = 0.0;     // 2^{d-1-α}(1+2^{β/2})ω/(d-1-α)
  double case_b = 0.0;     // 2^{d-α+β/2}(ω/(d-1-α) + (π/a)^{(d-1)/2})
  double total = 0.0;      // c_profile · max(case_a, case_b)
};

KernelBoundConstants kernel_bound_constants(const KernelModel& kernel, double a);

struct GainBoundReport {
  KernelBoundConstants constants;
  double offset_factor = 1.0;  // e^c of the Maxwellian
  double lhs = 0.0;            // max Q⁺(f,M) / (w_ε M)
  double norm = 0.0;           // ∫ f w_ε / M
  double rhs = 0.0;            // e^c C_K · norm
  double margin = 0.0;         // rhs - lhs
  bool holds = false;
};

// Rejects drifting Maxwellians (b != 0).
GainBoundReport verify_weighted_gain_bound(const Field& f, const MaxwellianParams& M, const CollisionOperator& op);

struct DissipativityValue {
  double sign_form = 0.0;  // ∫ Q(f,u) sign u
  double half_form = 0.0;  // ∫ Q(f,u) (sign u + 1)/2
  double scale = 0.0;      // ‖u‖₁ ν_max
};

// Weak-form discretization, sign(0) = sign_at_zero.
DissipativityValue dissipativity_functional(const Field& f, const Field& u, const CollisionOperator& op,
                                            double sign_at_zero = -1.0);

struct HolderGap {
  double lhs = 0.0;
  double rhs = 0.0;
  double c_p = 0.0;
  double distance = 0.0;  // ‖f - g‖_{L¹}
  bool holds = false;
};

HolderGap holder_gap(const Field& f, const Field& g, double p, double k, const CollisionOperator& op);

}  // namespace boltz

#pragma once

#include <string>
#include <vector>

#include "boltz/collision.hpp"
#include "boltz/estimates.hpp"

namespace boltz {

struct BarrierInputs {
  double a0 = 1.0;
  double c0 = 0.0;
  double a1 = 0.75;
  double c1 = 0.0;
  double C1 = 1.0;
  double rho0 = 1.0;
  double C0 = 1.0;
  double a = 0.5;

  void validate() const;
};

// L = max_{y>=0} y^β e^{-a₁y²+c₁}.
double compute_L(double a1, double c1, double beta);
// Brute-force maximization on a fine mesh, used to cross-check compute_L.
double compute_L_search(double a1, double c1, double beta, int samples = 200001);

// Largest positive root of C + L C₁ + C y^{β-ε} - ρ₀ y^β = 0.
double compute_R(double C, double LC1, double rho0, double beta, double eps);
double r_equation_residual(double R, double C, double LC1, double rho0, double beta, double eps);

struct BarrierCertificate {
  BarrierInputs inputs;
  double beta = 1.0;
  double eps = 1.0;
  double L = 0.0;
  double lambda = 0.0;  // sup_y (1+y^{β-ε}) e^{-(a₁-a)y²}
  KernelBoundConstants kernel_constants;
  double C = 0.0;       // gain constant: C_K C₁ e^{c₁} Λ
  double R = 0.0;
  double c = 0.0;
  double log_c0_term = 0.0;  // aR² + ln C₀

  MaxwellianParams barrier() const { return MaxwellianParams{inputs.a, {0.0, 0.0, 0.0}, c}; }
};

BarrierCertificate build_barrier(const BarrierInputs& in, const KernelModel& kernel);

struct Hypotheses {
  double mass = 0.0;
  double sup_f = 0.0;
  double weighted_mass = 0.0;  // ∫ f / M₁
  bool density_ok = false;
  bool sup_ok = false;
  bool weighted_ok = false;
  bool applicable() const { return density_ok && sup_ok && weighted_ok; }
};

struct TailReport {
  double radius = 0.0;
  std::size_t cells = 0;
  std::size_t failures = 0;
  double worst_excess = 0.0;  // max (Q⁺ - Q⁻(1+δ) - η) / max Q⁻, tail cells only
  bool pass = true;
};

struct BarrierCheck {
  Hypotheses hypotheses;
  TailReport tail;           // at the a-priori radius R
  TailReport tail_observed;  // at the diagnostic radius R_obs
  double c_observed = 0.0;   // max_v Q⁺(f,M_a)/(w_ε M_a)
  double r_observed = 0.0;
  bool in_ball = false;
  double in_ball_worst = 0.0;  // max over |v| <= R of f/M
  double ball_min_f = 0.0;     // diagnostic lower barrier: min f on |v| <= R
  double delta = 0.02;
  double eta_scale = 1e-10;
  bool applicable = false;
  bool pass = false;         // applicable && tail.pass && in_ball
  std::string note;
};

BarrierCheck check_barrier_inequality(const Field& f, const BarrierCertificate& cert, const CollisionOperator& op,
                                      double delta = 0.02, double eta_scale = 1e-10);

struct LinearOrderVerdict {
  double dt_nu_max = 0.0;
  int steps = 0;
  double worst_positive = 0.0;  // max_t max_v u / ‖u0‖∞
  double worst_mass_drift = 0.0;
  bool pass = false;
};

// Explicit Euler for ∂ₜu = Q⁺(f,u) - ν_f u with f frozen. Projection rescales u to the linear
// operator's exact mass, which keeps the sign pattern.
LinearOrderVerdict evolve_linear_order_check(const Field& f_frozen, const Field& u0, double dt, int steps,
                                             const CollisionOperator& op, bool project = true);

}  // namespace boltz

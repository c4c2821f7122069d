#pragma once

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace boltz {

using Vec3 = std::array<double, 3>;

enum class ProfileKind { isotropic, power_singular, table };

std::string to_string(ProfileKind kind);
ProfileKind profile_from_string(const std::string& name);

struct KernelSpec {
  int d = 3;
  double beta = 1.0;
  ProfileKind profile = ProfileKind::isotropic;
  double alpha = 0.0;                // power_singular only
  std::vector<double> table_z;       // table only, strictly increasing in (-1, 1)
  std::vector<double> table_h;
  std::optional<double> amplitude;   // if given, must match the computed normalization
};

struct AkValue {
  double value = 0.0;
  double error_estimate = 0.0;
  int nodes = 0;
};

class KernelModel {
 public:
  KernelModel() = default;

  const KernelSpec& spec() const { return spec_; }
  int d() const { return spec_.d; }
  double beta() const { return spec_.beta; }
  // Exponent of the angular singularity; zero for bounded profiles.
  double alpha() const { return alpha_; }
  // ω_{d-2}: 2π for d = 3, 2 for d = 2.
  double omega() const { return omega_; }
  double amplitude() const { return amplitude_; }
  ProfileKind profile() const { return spec_.profile; }

  // Normalized angular profile and its symmetrization.
  double h(double z) const;
  double hbar(double z) const;
  // Smooth factors: h(z) = h_regular(z) (1-z²)^{-α/2}, likewise for h̄.
  double h_regular(double z) const;
  double hbar_regular(double z) const;

  // d - 1 - α, the exponent governing the decay of a_k.
  double epsilon_angular() const { return d() - 1.0 - alpha_; }
  // min{β, d-1-α}.
  double epsilon_weight() const;

  // Measured ∫_{S^{d-1}} h dσ - 1 with an independent rule.
  double normalization_defect() const { return normalization_defect_; }

 private:
  friend KernelModel normalize_kernel(const KernelSpec& spec);
  double raw_regular(double z) const;

  KernelSpec spec_;
  double alpha_ = 0.0;
  double omega_ = 0.0;
  double amplitude_ = 1.0;
  double normalization_defect_ = 0.0;
  std::shared_ptr<const void> table_;  // type-erased PCHIP interpolant
};

KernelModel normalize_kernel(const KernelSpec& spec);

// |u|^β h(cosθ), or the folded value (h(cosθ)+h(-cosθ))|u|^β 1_{cosθ>0}.
double eval_kernel(const KernelModel& model, const Vec3& u, const Vec3& sigma, bool folded);

AkValue compute_ak_detailed(const KernelModel& model, double k);
double compute_ak(const KernelModel& model, double k);

// Beta-function closed form for isotropic and power-singular profiles; NaN for tables.
double ak_closed_form(const KernelModel& model, double k);

// Least-squares slope of log a_k against log k on log-spaced samples in [k1, k2].
double fit_ak_exponent(const KernelModel& model, double k1, double k2, int samples = 16);

// Reads a two-column "z,h" CSV profile.
void load_profile_table(const std::string& path, KernelSpec& spec);

}  // namespace boltz

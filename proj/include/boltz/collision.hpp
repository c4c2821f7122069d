#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "boltz/fields.hpp"
#include "boltz/kernel.hpp"

namespace boltz {

// Discretization of dσ against h. Nodes are (z, φ) pairs with σ = z e0 + √(1-z²)(cosφ e1 + sinφ e2);
// for d = 2 the azimuth is the two-point set {0, π}. Weights include the angular profile and are
// rescaled to sum to one on the folded hemisphere (or the full sphere when folded is false).
struct AngularQuadrature {
  int d = 3;
  int nz = 0;
  int nphi = 0;
  bool folded = true;
  std::vector<double> z;
  std::vector<double> cphi;
  std::vector<double> sphi;
  std::vector<double> w;
  double raw_weight_sum = 0.0;

  std::size_t size() const { return w.size(); }
};

AngularQuadrature make_angular_quadrature(const KernelModel& kernel, int nz, int nphi, bool folded = true);

// Polar rule on the hyperplane orthogonal to v - v'✳. Radial nodes t = |y|/|v-v'✳| carry the Jacobi
// weight t^{d-2-α}; whole_plane uses the unfolded kernel out to r_cut (bounded profiles only).
struct PlaneQuadrature {
  int nr = 6;
  int nphi = 12;
  bool whole_plane = false;
  double r_cut = 0.0;
  bool coincident_correction = true;  // disk rule only
};

// Orthonormal completion of a unit vector. e1(-e0) = e1(e0), so e2 flips with e0.
void orthonormal_frame(int d, const Vec3& e0, Vec3& e1, Vec3& e2);

enum class Interpolation { multilinear, maxwellian_ratio };

// Isotropic Maxwellian fitted to log f (weighted by f), used to interpolate f / M_f.
struct Reference {
  bool active = false;
  double a = 0.0;
  Vec3 center{0.0, 0.0, 0.0};

  double log_at(const Vec3& v) const;
  bool same_as(const Reference& o) const { return active == o.active && a == o.a && center == o.center; }
};

Reference fit_reference(const Field& f);

namespace detail {
struct StencilPoint {
  std::int32_t off;
  std::int16_t fl[3];
  float t[3];
};
class SigmaStencil;
}  // namespace detail

// Evaluates the collision operator on a fixed grid and angular rule. Stencils are
// built once per instance, so repeated evaluation (time stepping) is cheap.
class CollisionOperator {
 public:
  // coincident_correction gives the v✳ = v cell the weight (Z_d(-β-2) - Z_d(-β))Δ^{β+d} and scales the
  // 2d axis neighbours by 1 - Z_d(-β-2)/(2d), matching the punctured lattice sum against the |u|^β kink
  // through second order (Z_d: lattice_zeta).
  CollisionOperator(const KernelModel& kernel, const VelocityGrid& grid, const AngularQuadrature& angq,
                    Interpolation interp = Interpolation::maxwellian_ratio, bool coincident_correction = true);
  ~CollisionOperator();
  CollisionOperator(const CollisionOperator&) = delete;
  CollisionOperator& operator=(const CollisionOperator&) = delete;

  const KernelModel& kernel() const { return kernel_; }
  const VelocityGrid& grid() const { return grid_; }
  const AngularQuadrature& angular() const { return angq_; }
  Interpolation interpolation() const { return interp_; }
  double coincident_speed() const;

  // ν_f(v) = Σ f(v✳)|v - v✳|^β Δ^d.
  Field frequency(const Field& f) const;
  Field loss(const Field& f, const Field& g) const;

  // Pointwise gain Q⁺(f, g); interpolates at the off-grid post-collision velocities.
  Field gain(const Field& f, const Field& g) const;
  // Q⁺(f, f), exploiting the pair symmetry.
  Field gain_self(const Field& f) const;
  // Q(f, f) = Q⁺(f, f) - ν_f f, without projection.
  Field collision(const Field& f) const;

  // Weak-form gain: scatters each post-collision contribution to the surrounding nodes with
  // multilinear hat weights. Positive in u, column sums equal ν_f up to mass leaving the box.
  Field weak_gain(const Field& f, const Field& u) const;

 private:
  Field gather(const Field& f, const Reference& rf, const Field& g, const Reference& rg) const;

  KernelModel kernel_;
  VelocityGrid grid_;
  AngularQuadrature angq_;
  Interpolation interp_;
  std::unique_ptr<detail::SigmaStencil> stencil_;
  std::vector<double> speed_;  // (Δ|D|)^β Δ^d per difference vector, coincident weight at D = 0
};

Field collision_frequency(const Field& f, const KernelModel& kernel);
Field q_minus(const Field& f, const Field& g, const KernelModel& kernel);
Field q_plus_sigma(const Field& f, const Field& g, const KernelModel& kernel, const AngularQuadrature& angq,
                   Interpolation interp = Interpolation::maxwellian_ratio);
Field q_plus_weak(const Field& f, const Field& u, const KernelModel& kernel, const AngularQuadrature& angq);

struct CarlemanResult {
  Field q;
  std::size_t skipped = 0;
};

CarlemanResult q_plus_carleman(const Field& f, const Field& g, const KernelModel& kernel, const PlaneQuadrature& planq,
                               Interpolation interp = Interpolation::maxwellian_ratio);

double carleman_kernel(const Vec3& v, const Vec3& vps, const MaxwellianParams& M, const KernelModel& kernel,
                       const PlaneQuadrature& planq, double min_separation);

// Subtracts weight·(λ₀ + λ·v + λ_e|v|²) so that mass, momentum and energy of q vanish.
Field project_conserved(const Field& q, const Field& weight);

}  // namespace boltz

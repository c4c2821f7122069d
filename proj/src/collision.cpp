#include "boltz/collision.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "boltz/parallel.hpp"
#include "boltz/quadrature.hpp"
#include "boltz/special.hpp"

namespace boltz {

namespace {

constexpr double kPi = std::numbers::pi;

Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

}  // namespace

void orthonormal_frame(int d, const Vec3& e0, Vec3& e1, Vec3& e2) {
  if (d == 2) {
    e1 = {-e0[1], e0[0], 0.0};
    e2 = {0.0, 0.0, 0.0};
    return;
  }
  int axis = 0;
  for (int k = 1; k < 3; ++k) {
    if (std::abs(e0[k]) < std::abs(e0[axis]) - 1e-14) axis = k;
  }
  Vec3 a{0.0, 0.0, 0.0};
  a[axis] = 1.0;
  const double dot = e0[axis];
  Vec3 t{a[0] - dot * e0[0], a[1] - dot * e0[1], a[2] - dot * e0[2]};
  const double nt = std::sqrt(norm2(t));
  e1 = {t[0] / nt, t[1] / nt, t[2] / nt};
  e2 = cross(e0, e1);
}

AngularQuadrature make_angular_quadrature(const KernelModel& kernel, int nz, int nphi, bool folded) {
  if (nz < 4) throw std::invalid_argument("angular quadrature too coarse: n_z must be at least 4");
  const int d = kernel.d();
  if (d == 3 && (nphi < 4 || nphi % 2 != 0)) throw std::invalid_argument("n_phi must be an even number >= 4");
  AngularQuadrature q;
  q.d = d;
  q.nz = nz;
  q.nphi = d == 3 ? nphi : 2;
  q.folded = folded;

  const double gamma = 0.5 * (d - 3.0 - kernel.alpha());
  std::vector<double> zn, zw;
  if (folded) {
    const QuadratureRule r = gauss_jacobi(nz, gamma, 0.0);
    const double scale = std::pow(0.5, gamma + 1.0);
    for (std::size_t i = 0; i < r.size(); ++i) {
      const double z = 0.5 * (1.0 + r.x[i]);
      zn.push_back(z);
      zw.push_back(r.w[i] * scale * std::pow(1.0 + z, gamma) * 2.0 * kernel.hbar_regular(z));
    }
  } else {
    const QuadratureRule r = gauss_jacobi(nz, gamma, gamma);
    for (std::size_t i = 0; i < r.size(); ++i) {
      zn.push_back(r.x[i]);
      zw.push_back(r.w[i] * kernel.h_regular(r.x[i]));
    }
  }

  std::vector<double> pc, ps;
  double wphi;
  if (d == 3) {
    for (int p = 0; p < nphi; ++p) {
      const double phi = 2.0 * kPi * (p + 0.5) / nphi;
      pc.push_back(std::cos(phi));
      ps.push_back(std::sin(phi));
    }
    wphi = 2.0 * kPi / nphi;
  } else {
    pc = {1.0, -1.0};
    ps = {0.0, 0.0};
    wphi = 1.0;
  }

  double total = 0.0;
  for (std::size_t i = 0; i < zn.size(); ++i) {
    for (std::size_t p = 0; p < pc.size(); ++p) {
      q.z.push_back(zn[i]);
      q.cphi.push_back(pc[p]);
      q.sphi.push_back(ps[p]);
      q.w.push_back(zw[i] * wphi);
      total += zw[i] * wphi;
    }
  }
  q.raw_weight_sum = total;
  for (double& w : q.w) w /= total;
  return q;
}

double Reference::log_at(const Vec3& v) const {
  if (!active) return 0.0;
  const Vec3 r{v[0] - center[0], v[1] - center[1], v[2] - center[2]};
  return -a * norm2(r);
}

namespace {

// Weighted least-squares fit of log f ≈ c₀ + b·v - a|v|² with weights f; exact for sampled Maxwellians.
bool log_quadratic_fit(const Field& f, double& a, Vec3& center) {
  const auto& g = f.grid;
  const int nb = g.d + 2;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(nb, nb);
  Eigen::VectorXd r = Eigen::VectorXd::Zero(nb);
  Eigen::VectorXd phi(nb);
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (!(f[i] > 0.0)) continue;
    const Vec3 v = g.velocity(i);
    phi(0) = 1.0;
    for (int k = 0; k < g.d; ++k) phi(1 + k) = v[k];
    phi(g.d + 1) = -norm2(v);
    A.noalias() += f[i] * phi * phi.transpose();
    r.noalias() += f[i] * std::log(f[i]) * phi;
  }
  const auto ldlt = A.ldlt();
  if (ldlt.info() != Eigen::Success) return false;
  const Eigen::VectorXd x = ldlt.solve(r);
  if (!x.allFinite() || !(x(g.d + 1) > 0.0)) return false;
  a = x(g.d + 1);
  center = {0.0, 0.0, 0.0};
  for (int k = 0; k < g.d; ++k) center[k] = x(1 + k) / (2.0 * a);
  return true;
}

}  // namespace

Reference fit_reference(const Field& f) {
  Reference ref;
  double maxabs = 0.0, minv = 0.0;
  for (double x : f.values) {
    maxabs = std::max(maxabs, std::abs(x));
    minv = std::min(minv, x);
  }
  if (maxabs == 0.0 || minv < -1e-10 * maxabs) return ref;
  const auto& g = f.grid;
  double a = 0.0;
  Vec3 c{0, 0, 0};
  if (!log_quadratic_fit(f, a, c)) return ref;
  if (!(a * g.vmax * g.vmax > 1e-12)) return ref;
  if (a * g.dx * g.dx > 4.0) return ref;
  double far = 0.0;
  for (int corner = 0; corner < (1 << g.d); ++corner) {
    Vec3 x{0, 0, 0};
    for (int k = 0; k < g.d; ++k) x[k] = ((corner >> k) & 1) ? g.vmax : -g.vmax;
    const Vec3 rr{x[0] - c[0], x[1] - c[1], x[2] - c[2]};
    far = std::max(far, norm2(rr));
  }
  if (a * far > 650.0) return ref;
  ref.active = true;
  ref.a = a;
  ref.center = c;
  return ref;
}

namespace detail {

// Shared index bookkeeping for stencils indexed by difference vectors D ∈ [-(N-1), N-1]^d
// and fields padded with one layer of zeros.
struct GridLayout {
  int d, n, p, span;
  std::int32_t stride[3];
  std::size_t nd;

  explicit GridLayout(const VelocityGrid& g) : d(g.d), n(g.n), p(g.n + 2), span(2 * g.n - 1) {
    if (d == 3) {
      stride[0] = p * p;
      stride[1] = p;
      stride[2] = 1;
      nd = std::size_t(span) * span * span;
    } else {
      stride[0] = p;
      stride[1] = 1;
      stride[2] = 0;
      nd = std::size_t(span) * span;
    }
  }

  std::size_t padded_size() const { return d == 3 ? std::size_t(p) * p * p : std::size_t(p) * p; }

  std::array<int, 3> dvec(std::size_t di) const {
    std::array<int, 3> D{0, 0, 0};
    if (d == 3) {
      D[2] = static_cast<int>(di % span) - (n - 1);
      di /= span;
      D[1] = static_cast<int>(di % span) - (n - 1);
      D[0] = static_cast<int>(di / span) - (n - 1);
    } else {
      D[1] = static_cast<int>(di % span) - (n - 1);
      D[0] = static_cast<int>(di / span) - (n - 1);
    }
    return D;
  }

  std::size_t dindex(const std::array<int, 3>& D) const {
    if (d == 3) return (std::size_t(D[0] + n - 1) * span + (D[1] + n - 1)) * span + (D[2] + n - 1);
    return std::size_t(D[0] + n - 1) * span + (D[1] + n - 1);
  }

  std::int32_t padded_index(const std::array<int, 3>& I) const {
    std::int32_t s = 0;
    for (int k = 0; k < d; ++k) s += (I[k] + 1) * stride[k];
    return s;
  }

  std::vector<double> pad(const std::vector<double>& values) const {
    std::vector<double> out(padded_size(), 0.0);
    if (d == 3) {
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          for (int k = 0; k < n; ++k)
            out[(i + 1) * stride[0] + (j + 1) * stride[1] + (k + 1)] = values[(std::size_t(i) * n + j) * n + k];
    } else {
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) out[(i + 1) * stride[0] + (j + 1)] = values[std::size_t(i) * n + j];
    }
    return out;
  }

  StencilPoint make_point(const double* o) const {
    StencilPoint sp{};
    sp.off = 0;
    for (int k = 0; k < 3; ++k) {
      sp.fl[k] = 0;
      sp.t[k] = 0.0f;
    }
    for (int k = 0; k < d; ++k) {
      const double fl = std::floor(o[k]);
      sp.fl[k] = static_cast<std::int16_t>(fl);
      sp.t[k] = static_cast<float>(o[k] - fl);
      sp.off += static_cast<std::int32_t>(fl) * stride[k];
    }
    return sp;
  }
};

inline bool point_inside(const StencilPoint& sp, const int* I, int d, int n) {
  for (int k = 0; k < d; ++k) {
    const unsigned pos = static_cast<unsigned>(I[k] + sp.fl[k] + 1);
    if (pos > static_cast<unsigned>(n)) return false;
  }
  return true;
}

template <int DIM>
inline double interp(const double* A, const StencilPoint& sp, std::int32_t base, const GridLayout& L) {
  const double* q = A + base + sp.off;
  if constexpr (DIM == 3) {
    const std::int32_t s0 = L.stride[0], s1 = L.stride[1];
    const double tx = sp.t[0], ty = sp.t[1], tz = sp.t[2];
    const double c00 = q[0] + tz * (q[1] - q[0]);
    const double c01 = q[s1] + tz * (q[s1 + 1] - q[s1]);
    const double c10 = q[s0] + tz * (q[s0 + 1] - q[s0]);
    const double c11 = q[s0 + s1] + tz * (q[s0 + s1 + 1] - q[s0 + s1]);
    const double c0 = c00 + ty * (c01 - c00);
    const double c1 = c10 + ty * (c11 - c10);
    return c0 + tx * (c1 - c0);
  } else {
    const std::int32_t s0 = L.stride[0];
    const double tx = sp.t[0], ty = sp.t[1];
    const double c0 = q[0] + ty * (q[1] - q[0]);
    const double c1 = q[s0] + ty * (q[s0 + 1] - q[s0]);
    return c0 + tx * (c1 - c0);
  }
}

template <int DIM>
inline void scatter(double* A, const StencilPoint& sp, std::int32_t base, const GridLayout& L, double w) {
  double* q = A + base + sp.off;
  if constexpr (DIM == 3) {
    const std::int32_t s0 = L.stride[0], s1 = L.stride[1];
    const double tx = sp.t[0], ty = sp.t[1], tz = sp.t[2];
    const double w0 = w * (1.0 - tx), w1 = w * tx;
    const double w00 = w0 * (1.0 - ty), w01 = w0 * ty, w10 = w1 * (1.0 - ty), w11 = w1 * ty;
    q[0] += w00 * (1.0 - tz);
    q[1] += w00 * tz;
    q[s1] += w01 * (1.0 - tz);
    q[s1 + 1] += w01 * tz;
    q[s0] += w10 * (1.0 - tz);
    q[s0 + 1] += w10 * tz;
    q[s0 + s1] += w11 * (1.0 - tz);
    q[s0 + s1 + 1] += w11 * tz;
  } else {
    const std::int32_t s0 = L.stride[0];
    const double tx = sp.t[0], ty = sp.t[1];
    const double w0 = w * (1.0 - tx), w1 = w * tx;
    q[0] += w0 * (1.0 - ty);
    q[1] += w0 * ty;
    q[s0] += w1 * (1.0 - ty);
    q[s0 + 1] += w1 * ty;
  }
}

inline Vec3 point_position(const VelocityGrid& g, const int* I, const StencilPoint& sp) {
  Vec3 x{0, 0, 0};
  for (int k = 0; k < g.d; ++k) x[k] = g.coord(I[k]) + g.dx * (sp.fl[k] + static_cast<double>(sp.t[k]));
  return x;
}

// For every D and angular node: offsets of v'✳ (slot 0) and v' (slot 1) relative to v,
// with v - v✳ = D in index units.
class SigmaStencil {
 public:
  SigmaStencil(const VelocityGrid& g, const AngularQuadrature& q) : layout(g), nq(q.size()) {
    pts.resize(layout.nd * nq * 2);
    for (std::size_t di = 0; di < layout.nd; ++di) {
      const auto D = layout.dvec(di);
      const double nD = std::sqrt(double(D[0]) * D[0] + double(D[1]) * D[1] + double(D[2]) * D[2]);
      if (nD == 0.0) continue;
      const Vec3 e0{D[0] / nD, D[1] / nD, D[2] / nD};
      Vec3 e1, e2;
      orthonormal_frame(g.d, e0, e1, e2);
      for (std::size_t k = 0; k < nq; ++k) {
        const double z = q.z[k];
        const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
        double s[3], ostar[3], oprime[3];
        for (int c = 0; c < 3; ++c) {
          const double sig = z * e0[c] + rho * (q.cphi[k] * e1[c] + q.sphi[k] * e2[c]);
          s[c] = 0.5 * nD * sig;
          ostar[c] = -0.5 * D[c] - s[c];
          oprime[c] = -0.5 * D[c] + s[c];
        }
        pts[(di * nq + k) * 2] = layout.make_point(ostar);
        pts[(di * nq + k) * 2 + 1] = layout.make_point(oprime);
      }
    }
  }

  GridLayout layout;
  std::size_t nq;
  std::vector<StencilPoint> pts;
};

// Difference vectors D of the pair (I, I - D) with I and I - D on the grid, for I in one axis-0 slab.
template <class Body>
void for_each_pair_in_slab(const GridLayout& L, int i0, bool with_coincident, Body&& body) {
  const int n = L.n;
  for (std::size_t di = 0; di < L.nd; ++di) {
    const auto D = L.dvec(di);
    if (!with_coincident && D[0] == 0 && D[1] == 0 && D[2] == 0) continue;
    const int j0 = i0 - D[0];
    if (j0 < 0 || j0 >= n) continue;
    const int lo1 = std::max(0, D[1]), hi1 = n - 1 + std::min(0, D[1]);
    if (L.d == 3) {
      const int lo2 = std::max(0, D[2]), hi2 = n - 1 + std::min(0, D[2]);
      for (int i1 = lo1; i1 <= hi1; ++i1)
        for (int i2 = lo2; i2 <= hi2; ++i2) {
          const int I[3] = {i0, i1, i2};
          const int J[3] = {j0, i1 - D[1], i2 - D[2]};
          body(di, I, J);
        }
    } else {
      for (int i1 = lo1; i1 <= hi1; ++i1) {
        const int I[3] = {i0, i1, 0};
        const int J[3] = {j0, i1 - D[1], 0};
        body(di, I, J);
      }
    }
  }
}

inline std::size_t flat_of(const GridLayout& L, const int* I) {
  if (L.d == 3) return (std::size_t(I[0]) * L.n + I[1]) * L.n + I[2];
  return std::size_t(I[0]) * L.n + I[1];
}

inline std::int32_t padded_of(const GridLayout& L, const int* I) {
  std::int32_t s = 0;
  for (int k = 0; k < L.d; ++k) s += (I[k] + 1) * L.stride[k];
  return s;
}

}  // namespace detail

using detail::GridLayout;
using detail::SigmaStencil;
using detail::StencilPoint;

namespace {

std::vector<double> ratio_values(const Field& f, const Reference& r) {
  std::vector<double> out(f.values);
  if (!r.active) return out;
  for (std::size_t i = 0; i < f.size(); ++i) out[i] = f[i] * std::exp(-r.log_at(f.grid.velocity(i)));
  return out;
}

std::vector<double> reference_values(const VelocityGrid& g, const Reference& r) {
  std::vector<double> out(g.size(), 1.0);
  if (!r.active) return out;
  for (std::size_t i = 0; i < g.size(); ++i) out[i] = std::exp(r.log_at(g.velocity(i)));
  return out;
}

double coincident_weight(const VelocityGrid& g, double beta) {
  return (lattice_zeta(g.d, -beta - 2.0) - lattice_zeta(g.d, -beta)) * std::pow(g.dx, beta) * g.cell_volume();
}

// Multiplier on the 2d nearest-neighbour weights from the second-order lattice term.
double neighbour_factor(const VelocityGrid& g, double beta) { return 1.0 - lattice_zeta(g.d, -beta - 2.0) / (2.0 * g.d); }

bool unit_axis(const std::array<int, 3>& D) { return std::abs(D[0]) + std::abs(D[1]) + std::abs(D[2]) == 1; }

std::vector<double> speed_table(const GridLayout& L, const VelocityGrid& g, double beta) {
  std::vector<double> sp(L.nd, 0.0);
  const double vol = g.cell_volume();
  for (std::size_t di = 0; di < L.nd; ++di) {
    const auto D = L.dvec(di);
    const double nD = std::sqrt(double(D[0]) * D[0] + double(D[1]) * D[1] + double(D[2]) * D[2]);
    if (nD > 0.0) sp[di] = std::pow(nD * g.dx, beta) * vol;
  }
  return sp;
}

template <int DIM, bool SHARED>
void gather_kernel(const SigmaStencil& st, const AngularQuadrature& aq, const VelocityGrid& grid,
                   const std::vector<double>& speed, const std::vector<double>& Fp, const std::vector<double>& Gp,
                   const std::vector<double>& RJ, const Reference& rf, const Reference& rg, std::vector<double>& out) {
  const GridLayout& L = st.layout;
  const std::size_t nq = st.nq;
  const double* F = Fp.data();
  const double* G = Gp.data();
  const double* W = aq.w.data();
  parallel_for(static_cast<std::size_t>(L.n), [&](std::size_t b0, std::size_t b1) {
    for (std::size_t slab = b0; slab < b1; ++slab) {
      detail::for_each_pair_in_slab(L, static_cast<int>(slab), speed[L.nd / 2] != 0.0, [&](std::size_t di, const int* I, const int* J) {
        const StencilPoint* P = &st.pts[di * nq * 2];
        const std::int32_t base = detail::padded_of(L, I);
        double s = 0.0;
        for (std::size_t q = 0; q < nq; ++q) {
          const StencilPoint& ps = P[2 * q];
          const StencilPoint& pp = P[2 * q + 1];
          if (!detail::point_inside(ps, I, DIM, L.n) || !detail::point_inside(pp, I, DIM, L.n)) continue;
          const double a = detail::interp<DIM>(F, ps, base, L);
          const double b = detail::interp<DIM>(G, pp, base, L);
          if constexpr (SHARED) {
            s += W[q] * a * b;
          } else {
            if (a == 0.0 || b == 0.0) continue;
            const double lr = rf.log_at(detail::point_position(grid, I, ps)) + rg.log_at(detail::point_position(grid, I, pp));
            s += W[q] * a * b * std::exp(lr);
          }
        }
        const std::size_t fi = detail::flat_of(L, I);
        if constexpr (SHARED) {
          out[fi] += speed[di] * RJ[detail::flat_of(L, J)] * s;
        } else {
          out[fi] += speed[di] * s;
        }
      });
    }
  });
}

template <int DIM>
void self_kernel(const SigmaStencil& st, const AngularQuadrature& aq, const std::vector<double>& speed,
                 const std::vector<double>& Fp, const std::vector<double>& R, std::vector<double>& out) {
  const GridLayout& L = st.layout;
  const int n = L.n;
  const std::size_t nq = st.nq;
  const double* F = Fp.data();
  const double* W = aq.w.data();

  auto positive = [](const std::array<int, 3>& D) {
    for (int k = 0; k < 3; ++k) {
      if (D[k] != 0) return D[k] > 0;
    }
    return false;
  };

  // Storage of P(D, I) for positive D over the sub-box of I with I - D on the grid.
  std::vector<std::size_t> offset(L.nd, 0);
  std::vector<std::size_t> plist;
  std::size_t total = 0;
  for (std::size_t di = 0; di < L.nd; ++di) {
    const auto D = L.dvec(di);
    if (!positive(D)) continue;
    offset[di] = total;
    std::size_t cnt = 1;
    for (int k = 0; k < L.d; ++k) cnt *= static_cast<std::size_t>(n - std::abs(D[k]));
    total += cnt;
    plist.push_back(di);
  }
  std::vector<double> P(total, 0.0);
  double wsum = 0.0;
  for (std::size_t q = 0; q < nq; ++q) wsum += W[q];

  auto sub_index = [&](const std::array<int, 3>& D, const int* I) {
    std::size_t s = 0;
    for (int k = 0; k < L.d; ++k) s = s * static_cast<std::size_t>(n - std::abs(D[k])) + (I[k] - std::max(0, D[k]));
    return s;
  };

  parallel_for(plist.size(), [&](std::size_t b0, std::size_t b1) {
    for (std::size_t pi = b0; pi < b1; ++pi) {
      const std::size_t di = plist[pi];
      const auto D = L.dvec(di);
      const StencilPoint* Pt = &st.pts[di * nq * 2];
      int lo[3] = {0, 0, 0}, hi[3] = {0, 0, 0};
      for (int k = 0; k < L.d; ++k) {
        lo[k] = std::max(0, D[k]);
        hi[k] = n - 1 + std::min(0, D[k]);
      }
      std::size_t idx = offset[di];
      for (int i0 = lo[0]; i0 <= hi[0]; ++i0)
        for (int i1 = lo[1]; i1 <= hi[1]; ++i1)
          for (int i2 = lo[2]; i2 <= hi[2]; ++i2) {
            const int I[3] = {i0, i1, i2};
            const std::int32_t base = detail::padded_of(L, I);
            double s = 0.0;
            for (std::size_t q = 0; q < nq; ++q) {
              const StencilPoint& ps = Pt[2 * q];
              const StencilPoint& pp = Pt[2 * q + 1];
              if (!detail::point_inside(ps, I, DIM, n) || !detail::point_inside(pp, I, DIM, n)) continue;
              s += W[q] * detail::interp<DIM>(F, ps, base, L) * detail::interp<DIM>(F, pp, base, L);
            }
            P[idx++] = s;
          }
    }
  });

  parallel_for(static_cast<std::size_t>(n), [&](std::size_t b0, std::size_t b1) {
    for (std::size_t slab = b0; slab < b1; ++slab) {
      detail::for_each_pair_in_slab(L, static_cast<int>(slab), speed[L.nd / 2] != 0.0, [&](std::size_t di, const int* I, const int* J) {
        const auto D = L.dvec(di);
        double p;
        if (di == L.nd / 2) {
          const double fi = F[detail::padded_of(L, I)];
          p = wsum * fi * fi;
        } else if (positive(D)) {
          p = P[offset[di] + sub_index(D, I)];
        } else {
          const std::array<int, 3> nD{-D[0], -D[1], -D[2]};
          p = P[offset[L.dindex(nD)] + sub_index(nD, J)];
        }
        out[detail::flat_of(L, I)] += speed[di] * R[detail::flat_of(L, J)] * p;
      });
    }
  });
}

template <int DIM>
void weak_kernel(const SigmaStencil& st, const AngularQuadrature& aq, const std::vector<double>& speed,
                 const Field& f, const Field& u, std::vector<double>& out) {
  const GridLayout& L = st.layout;
  const int n = L.n;
  const std::size_t nq = st.nq;
  const double* W = aq.w.data();
  const std::size_t psize = L.padded_size();
  std::vector<std::vector<double>> buffers(static_cast<std::size_t>(n));
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t b0, std::size_t b1) {
    for (std::size_t slab = b0; slab < b1; ++slab) {
      std::vector<double> buf(psize, 0.0);
      detail::for_each_pair_in_slab(L, static_cast<int>(slab), speed[L.nd / 2] != 0.0, [&](std::size_t di, const int* I, const int* J) {
        const double c = u[detail::flat_of(L, I)] * f[detail::flat_of(L, J)] * speed[di];
        if (c == 0.0) return;
        const StencilPoint* Pt = &st.pts[di * nq * 2];
        const std::int32_t base = detail::padded_of(L, I);
        for (std::size_t q = 0; q < nq; ++q) {
          const StencilPoint& pp = Pt[2 * q + 1];
          if (!detail::point_inside(pp, I, DIM, n)) continue;
          detail::scatter<DIM>(buf.data(), pp, base, L, c * W[q]);
        }
      });
      buffers[slab] = std::move(buf);
    }
  });
  std::vector<double> acc(psize, 0.0);
  for (const auto& b : buffers) {
    for (std::size_t i = 0; i < psize; ++i) acc[i] += b[i];
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto idx = f.grid.index(i);
    const int I[3] = {idx[0], idx[1], idx[2]};
    out[i] = acc[detail::padded_of(L, I)];
  }
}

}  // namespace

CollisionOperator::CollisionOperator(const KernelModel& kernel, const VelocityGrid& grid, const AngularQuadrature& angq,
                                     Interpolation interp, bool coincident_correction)
    : kernel_(kernel), grid_(grid), angq_(angq), interp_(interp) {
  if (kernel.d() != grid.d || angq.d != grid.d) throw std::invalid_argument("kernel, grid and quadrature dimensions differ");
  if (!angq.folded) throw std::invalid_argument("collision operator requires the folded angular rule");
  stencil_ = std::make_unique<SigmaStencil>(grid, angq);
  speed_ = speed_table(stencil_->layout, grid, kernel.beta());
  if (coincident_correction) {
    const GridLayout& L = stencil_->layout;
    speed_[L.nd / 2] = coincident_weight(grid, kernel.beta());
    const double nf = neighbour_factor(grid, kernel.beta());
    for (std::size_t di = 0; di < L.nd; ++di) {
      if (unit_axis(L.dvec(di))) speed_[di] *= nf;
    }
  }
}

double CollisionOperator::coincident_speed() const { return speed_[stencil_->layout.nd / 2]; }

CollisionOperator::~CollisionOperator() = default;

Field CollisionOperator::frequency(const Field& f) const {
  if (f.grid != grid_) throw std::invalid_argument("frequency: grid mismatch");
  const GridLayout& L = stencil_->layout;
  Field nu(grid_);
  parallel_for(static_cast<std::size_t>(grid_.n), [&](std::size_t b0, std::size_t b1) {
    for (std::size_t slab = b0; slab < b1; ++slab) {
      detail::for_each_pair_in_slab(L, static_cast<int>(slab), speed_[L.nd / 2] != 0.0, [&](std::size_t di, const int* I, const int* J) {
        nu[detail::flat_of(L, I)] += speed_[di] * f[detail::flat_of(L, J)];
      });
    }
  });
  return nu;
}

Field CollisionOperator::loss(const Field& f, const Field& g) const {
  require_same_grid(f, g, "q_minus");
  Field nu = frequency(f);
  for (std::size_t i = 0; i < nu.size(); ++i) nu[i] *= g[i];
  return nu;
}

Field CollisionOperator::gather(const Field& f, const Reference& rf, const Field& g, const Reference& rg) const {
  const GridLayout& L = stencil_->layout;
  const std::vector<double> Fp = L.pad(ratio_values(f, rf));
  const std::vector<double> Gp = L.pad(ratio_values(g, rg));
  Field out(grid_);
  const bool shared = rf.same_as(rg);
  if (shared) {
    const std::vector<double> R = reference_values(grid_, rf);
    if (grid_.d == 3) {
      gather_kernel<3, true>(*stencil_, angq_, grid_, speed_, Fp, Gp, R, rf, rg, out.values);
    } else {
      gather_kernel<2, true>(*stencil_, angq_, grid_, speed_, Fp, Gp, R, rf, rg, out.values);
    }
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= R[i];
  } else {
    const std::vector<double> none;
    if (grid_.d == 3) {
      gather_kernel<3, false>(*stencil_, angq_, grid_, speed_, Fp, Gp, none, rf, rg, out.values);
    } else {
      gather_kernel<2, false>(*stencil_, angq_, grid_, speed_, Fp, Gp, none, rf, rg, out.values);
    }
  }
  return out;
}

Field CollisionOperator::gain(const Field& f, const Field& g) const {
  require_same_grid(f, g, "q_plus");
  if (f.grid != grid_) throw std::invalid_argument("q_plus: grid mismatch");
  const bool ratio = interp_ == Interpolation::maxwellian_ratio;
  const Reference rf = ratio ? fit_reference(f) : Reference{};
  const Reference rg = ratio ? fit_reference(g) : Reference{};
  return gather(f, rf, g, rg);
}

Field CollisionOperator::gain_self(const Field& f) const {
  if (f.grid != grid_) throw std::invalid_argument("q_plus: grid mismatch");
  const std::size_t n = grid_.size();
  if (n * (n - 1) / 2 > (std::size_t(1) << 26)) return gain(f, f);
  const Reference r = interp_ == Interpolation::maxwellian_ratio ? fit_reference(f) : Reference{};
  const GridLayout& L = stencil_->layout;
  const std::vector<double> Fp = L.pad(ratio_values(f, r));
  const std::vector<double> R = reference_values(grid_, r);
  Field out(grid_);
  if (grid_.d == 3) {
    self_kernel<3>(*stencil_, angq_, speed_, Fp, R, out.values);
  } else {
    self_kernel<2>(*stencil_, angq_, speed_, Fp, R, out.values);
  }
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= R[i];
  return out;
}

Field CollisionOperator::collision(const Field& f) const {
  Field q = gain_self(f);
  const Field nu = frequency(f);
  for (std::size_t i = 0; i < q.size(); ++i) q[i] -= nu[i] * f[i];
  return q;
}

Field CollisionOperator::weak_gain(const Field& f, const Field& u) const {
  require_same_grid(f, u, "weak_gain");
  if (f.grid != grid_) throw std::invalid_argument("weak_gain: grid mismatch");
  Field out(grid_);
  if (grid_.d == 3) {
    weak_kernel<3>(*stencil_, angq_, speed_, f, u, out.values);
  } else {
    weak_kernel<2>(*stencil_, angq_, speed_, f, u, out.values);
  }
  return out;
}

namespace {
AngularQuadrature default_angular(const KernelModel& k) { return make_angular_quadrature(k, 4, 8, true); }
}  // namespace

Field collision_frequency(const Field& f, const KernelModel& kernel) {
  CollisionOperator op(kernel, f.grid, default_angular(kernel));
  return op.frequency(f);
}

Field q_minus(const Field& f, const Field& g, const KernelModel& kernel) {
  require_same_grid(f, g, "q_minus");
  CollisionOperator op(kernel, f.grid, default_angular(kernel));
  return op.loss(f, g);
}

Field q_plus_sigma(const Field& f, const Field& g, const KernelModel& kernel, const AngularQuadrature& angq,
                   Interpolation interp) {
  require_same_grid(f, g, "q_plus_sigma");
  CollisionOperator op(kernel, f.grid, angq, interp);
  return op.gain(f, g);
}

Field q_plus_weak(const Field& f, const Field& u, const KernelModel& kernel, const AngularQuadrature& angq) {
  require_same_grid(f, u, "q_plus_weak");
  CollisionOperator op(kernel, f.grid, angq, Interpolation::multilinear);
  return op.weak_gain(f, u);
}

namespace {

struct PlaneNode {
  double t;    // |y| / |z|
  double c, s; // azimuth
  double w;    // radial × azimuthal weight, excluding t^{d-2-α}
  bool outer;  // beyond the disk (whole-plane rule)
};

std::vector<PlaneNode> plane_nodes(const KernelModel& kernel, const PlaneQuadrature& pq, double zlen) {
  const int d = kernel.d();
  const double alpha = kernel.alpha();
  if (pq.nr < 2) throw std::invalid_argument("plane quadrature needs at least 2 radial nodes");
  std::vector<double> pc, ps;
  double wphi;
  if (d == 3) {
    if (pq.nphi < 4) throw std::invalid_argument("plane quadrature needs at least 4 azimuthal nodes");
    for (int p = 0; p < pq.nphi; ++p) {
      const double phi = 2.0 * kPi * (p + 0.5) / pq.nphi;
      pc.push_back(std::cos(phi));
      ps.push_back(std::sin(phi));
    }
    wphi = 2.0 * kPi / pq.nphi;
  } else {
    pc = {1.0, -1.0};
    ps = {0.0, 0.0};
    wphi = 1.0;
  }
  std::vector<PlaneNode> nodes;
  const QuadratureRule inner = gauss_jacobi_unit(pq.nr, 0.0, d - 2.0 - alpha);
  for (std::size_t i = 0; i < inner.size(); ++i)
    for (std::size_t p = 0; p < pc.size(); ++p) nodes.push_back({inner.x[i], pc[p], ps[p], inner.w[i] * wphi, false});
  if (pq.whole_plane) {
    if (alpha != 0.0) throw std::invalid_argument("whole-plane Carleman rule requires a bounded angular profile");
    const double tmax = pq.r_cut / zlen;
    if (tmax > 1.0) {
      const QuadratureRule gl = gauss_legendre(2 * pq.nr);
      for (std::size_t i = 0; i < gl.size(); ++i) {
        const double t = 1.0 + 0.5 * (tmax - 1.0) * (gl.x[i] + 1.0);
        const double w = 0.5 * (tmax - 1.0) * gl.w[i];
        for (std::size_t p = 0; p < pc.size(); ++p) nodes.push_back({t, pc[p], ps[p], w * wphi, true});
      }
    }
  }
  return nodes;
}

// Carleman integrand factor for unit-weight nodes: 2^{d-1}/|z| · |z|^{d-1} · B/|u|^{d-2} with the
// Jacobi factor t^{d-2-α} removed on the disk.
double carleman_weight(const KernelModel& kernel, const PlaneNode& nd, double zlen, bool whole_plane) {
  const int d = kernel.d();
  const double t = nd.t;
  const double ulen = zlen * std::sqrt(1.0 + t * t);
  const double cth = (1.0 - t * t) / (1.0 + t * t);
  const double pre = std::pow(2.0, d - 1.0) * std::pow(zlen, d - 2.0) * std::pow(ulen, kernel.beta() - (d - 2.0));
  if (whole_plane) {
    const double jac = nd.outer ? std::pow(t, d - 2.0) : 1.0;
    return pre * nd.w * jac * kernel.h(cth);
  }
  const double alpha = kernel.alpha();
  const double ang = 2.0 * kernel.hbar_regular(cth) * std::pow(2.0, -alpha) * std::pow(1.0 + t * t, alpha);
  return pre * nd.w * ang;
}

}  // namespace

CarlemanResult q_plus_carleman(const Field& f, const Field& g, const KernelModel& kernel, const PlaneQuadrature& planq,
                               Interpolation interp) {
  require_same_grid(f, g, "q_plus_carleman");
  const VelocityGrid& grid = f.grid;
  if (kernel.d() != grid.d) throw std::invalid_argument("q_plus_carleman: dimension mismatch");
  PlaneQuadrature pq = planq;
  if (pq.whole_plane && pq.r_cut <= 0.0) pq.r_cut = 2.0 * grid.vmax * std::sqrt(double(grid.d));
  GridLayout L(grid);
  const Reference rg = interp == Interpolation::maxwellian_ratio ? fit_reference(g) : Reference{};
  const std::vector<double> Gp = L.pad(ratio_values(g, rg));

  const bool correct = pq.coincident_correction && !pq.whole_plane;
  const double nf = neighbour_factor(grid, kernel.beta());

  // Stencil per difference vector D = v'✳ - v in index units.
  std::vector<std::vector<StencilPoint>> pts(L.nd);
  std::vector<std::vector<double>> wts(L.nd);
  const double vol = grid.cell_volume();
  for (std::size_t di = 0; di < L.nd; ++di) {
    const auto D = L.dvec(di);
    const double nD = std::sqrt(double(D[0]) * D[0] + double(D[1]) * D[1] + double(D[2]) * D[2]);
    if (nD == 0.0) continue;
    const double zlen = nD * grid.dx;
    const Vec3 e0{D[0] / nD, D[1] / nD, D[2] / nD};
    Vec3 e1, e2;
    orthonormal_frame(grid.d, e0, e1, e2);
    for (const PlaneNode& nd : plane_nodes(kernel, pq, zlen)) {
      double o[3];
      for (int c = 0; c < 3; ++c) o[c] = nD * nd.t * (nd.c * e1[c] + nd.s * e2[c]);
      pts[di].push_back(L.make_point(o));
      wts[di].push_back(vol * carleman_weight(kernel, nd, zlen, pq.whole_plane) * (correct && unit_axis(D) ? nf : 1.0));
    }
  }

  // Coincident cell: the integrand behaves like |z|^β f(v) A₀ g(v) as z → 0.
  double self_weight = 0.0;
  if (correct) {
    double a0 = 0.0;
    for (const PlaneNode& nd : plane_nodes(kernel, pq, 1.0)) a0 += carleman_weight(kernel, nd, 1.0, false);
    self_weight = a0 * coincident_weight(grid, kernel.beta());
  }

  CarlemanResult res;
  res.q = Field(grid);
  const int n = grid.n;
  const int d = grid.d;
  parallel_for(grid.size(), [&](std::size_t b0, std::size_t b1) {
    for (std::size_t fi = b0; fi < b1; ++fi) {
      const auto Ia = grid.index(fi);
      const int I[3] = {Ia[0], Ia[1], Ia[2]};
      const std::int32_t base = detail::padded_of(L, I);
      double acc = 0.0;
      for (std::size_t ki = 0; ki < grid.size(); ++ki) {
        if (ki == fi || f[ki] == 0.0) continue;
        const auto K = grid.index(ki);
        const std::array<int, 3> D{K[0] - I[0], K[1] - I[1], d == 3 ? K[2] - I[2] : 0};
        const std::size_t di = L.dindex(D);
        const auto& P = pts[di];
        const auto& Wt = wts[di];
        double s = 0.0;
        for (std::size_t q = 0; q < P.size(); ++q) {
          if (!detail::point_inside(P[q], I, d, n)) continue;
          double gv = d == 3 ? detail::interp<3>(Gp.data(), P[q], base, L) : detail::interp<2>(Gp.data(), P[q], base, L);
          if (gv == 0.0) continue;
          if (rg.active) gv *= std::exp(rg.log_at(detail::point_position(grid, I, P[q])));
          s += Wt[q] * gv;
        }
        acc += f[ki] * s;
      }
      if (correct) acc += self_weight * f[fi] * g[fi];
      res.q[fi] = acc;
    }
  });
  res.skipped = correct ? 0 : grid.size();
  return res;
}

double carleman_kernel(const Vec3& v, const Vec3& vps, const MaxwellianParams& M, const KernelModel& kernel,
                       const PlaneQuadrature& planq, double min_separation) {
  if (M.b != Vec3{0.0, 0.0, 0.0}) throw std::invalid_argument("carleman_kernel: Maxwellian must be centered");
  const Vec3 z{vps[0] - v[0], vps[1] - v[1], vps[2] - v[2]};
  const double zlen = std::sqrt(norm2(z));
  if (zlen < min_separation) throw std::invalid_argument("carleman_kernel: points closer than the minimum separation");
  const Vec3 e0{z[0] / zlen, z[1] / zlen, z[2] / zlen};
  Vec3 e1, e2;
  orthonormal_frame(kernel.d(), e0, e1, e2);
  PlaneQuadrature pq = planq;
  pq.whole_plane = false;
  double sum = 0.0;
  for (const PlaneNode& nd : plane_nodes(kernel, pq, zlen)) {
    Vec3 vs;
    for (int c = 0; c < 3; ++c) vs[c] = vps[c] + zlen * nd.t * (nd.c * e1[c] + nd.s * e2[c]);
    sum += carleman_weight(kernel, nd, zlen, false) * M.value(vs);
  }
  return sum;
}

Field project_conserved(const Field& q, const Field& weight) {
  require_same_grid(q, weight, "project_conserved");
  const VelocityGrid& g = q.grid;
  const int nb = g.d + 2;
  std::vector<std::array<double, 5>> basis(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) {
    const Vec3 v = g.velocity(i);
    auto& b = basis[i];
    b[0] = 1.0;
    for (int k = 0; k < g.d; ++k) b[1 + k] = v[k];
    b[g.d + 1] = norm2(v);
  }
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(nb, nb);
  for (std::size_t i = 0; i < q.size(); ++i) {
    for (int a = 0; a < nb; ++a)
      for (int b = 0; b < nb; ++b) gram(a, b) += weight[i] * basis[i][a] * basis[i][b];
  }
  Field out = q;
  auto residual = [&](const Field& x) {
    Eigen::VectorXd r = Eigen::VectorXd::Zero(nb);
    for (std::size_t i = 0; i < x.size(); ++i)
      for (int a = 0; a < nb; ++a) r(a) += x[i] * basis[i][a];
    return r;
  };
  const auto ldlt = gram.ldlt();
  if (ldlt.info() != Eigen::Success || !(gram.diagonal().minCoeff() > 0.0)) {
    throw std::invalid_argument("project_conserved: projection weight is degenerate");
  }
  for (int pass = 0; pass < 2; ++pass) {
    const Eigen::VectorXd lam = ldlt.solve(residual(out));
    for (std::size_t i = 0; i < out.size(); ++i) {
      double c = 0.0;
      for (int a = 0; a < nb; ++a) c += lam(a) * basis[i][a];
      out[i] -= weight[i] * c;
    }
  }
  return out;
}

}  // namespace boltz

#include "boltz/kernel.hpp"

#include <math.h>

#include <boost/math/interpolators/pchip.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "boltz/quadrature.hpp"
#include "boltz/special.hpp"

namespace boltz {

namespace {

using Pchip = boost::math::interpolators::pchip<std::vector<double>>;

constexpr double kPi = std::numbers::pi;

double sphere_factor(int d) { return d == 3 ? 2.0 * kPi : 2.0; }

// Composite Gauss–Legendre over θ ∈ [0, π] with breakpoints at the table knots,
// used for tabulated profiles where the integrand is only piecewise smooth.
template <class F>
double theta_composite(const std::vector<double>& knots_z, int subdivisions, F&& integrand) {
  static const QuadratureRule gl = gauss_legendre(16);
  std::vector<double> breaks{0.0, kPi};
  for (double z : knots_z) breaks.push_back(std::acos(std::clamp(z, -1.0, 1.0)));
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    const double lo = breaks[i];
    const double width = (breaks[i + 1] - lo) / subdivisions;
    for (int s = 0; s < subdivisions; ++s) {
      const double a = lo + s * width;
      for (std::size_t q = 0; q < gl.size(); ++q) {
        const double th = a + 0.5 * width * (gl.x[q] + 1.0);
        total += 0.5 * width * gl.w[q] * integrand(th);
      }
    }
  }
  return total;
}

}  // namespace

std::string to_string(ProfileKind kind) {
  switch (kind) {
    case ProfileKind::isotropic: return "isotropic";
    case ProfileKind::power_singular: return "power_singular";
    case ProfileKind::table: return "table";
  }
  return "unknown";
}

ProfileKind profile_from_string(const std::string& name) {
  if (name == "isotropic") return ProfileKind::isotropic;
  if (name == "power_singular") return ProfileKind::power_singular;
  if (name == "table") return ProfileKind::table;
  throw std::invalid_argument("profile must be one of isotropic, power_singular, table (got '" + name + "')");
}

double KernelModel::raw_regular(double z) const {
  if (spec_.profile == ProfileKind::table) {
    const auto& p = *static_cast<const Pchip*>(table_.get());
    const double lo = spec_.table_z.front();
    const double hi = spec_.table_z.back();
    return std::max(0.0, p(std::clamp(z, lo, hi)));
  }
  return 1.0;
}

double KernelModel::h_regular(double z) const { return amplitude_ * raw_regular(z); }

double KernelModel::hbar_regular(double z) const { return 0.5 * (h_regular(z) + h_regular(-z)); }

double KernelModel::h(double z) const {
  const double reg = h_regular(z);
  if (alpha_ == 0.0) return reg;
  const double s = 1.0 - z * z;
  if (s <= 0.0) return alpha_ > 0.0 ? INFINITY : 0.0;
  return reg * std::pow(s, -0.5 * alpha_);
}

double KernelModel::hbar(double z) const { return 0.5 * (h(z) + h(-z)); }

double KernelModel::epsilon_weight() const { return std::min(beta(), epsilon_angular()); }

KernelModel normalize_kernel(const KernelSpec& spec) {
  if (spec.d != 2 && spec.d != 3) throw std::invalid_argument("dimension must be 2 or 3");
  if (!(spec.beta > 0.0 && spec.beta <= 1.0)) throw std::invalid_argument("beta must lie in (0,1]");

  KernelModel m;
  m.spec_ = spec;
  m.omega_ = sphere_factor(spec.d);
  m.alpha_ = spec.profile == ProfileKind::power_singular ? spec.alpha : 0.0;
  if (!(m.alpha_ < spec.d - 1.0)) throw std::invalid_argument("alpha < d-1 required");
  if (spec.profile == ProfileKind::power_singular && m.alpha_ < 0.0) {
    throw std::invalid_argument("alpha >= 0 required: a vanishing power profile has decreasing symmetrization");
  }

  if (spec.profile == ProfileKind::table) {
    const auto& z = spec.table_z;
    const auto& hv = spec.table_h;
    if (z.size() < 4 || z.size() != hv.size()) throw std::invalid_argument("table profile needs at least 4 (z,h) pairs");
    for (std::size_t i = 0; i < z.size(); ++i) {
      if (!(z[i] >= -1.0 && z[i] <= 1.0)) throw std::invalid_argument("table nodes must lie in [-1,1]");
      if (i > 0 && !(z[i] > z[i - 1])) throw std::invalid_argument("table nodes must be strictly increasing");
      if (!(hv[i] >= 0.0) || !std::isfinite(hv[i])) throw std::invalid_argument("table profile samples must be nonnegative");
    }
    m.table_ = std::make_shared<const Pchip>(std::vector<double>(z), std::vector<double>(hv));
  }

  const double gamma = 0.5 * (spec.d - 3.0 - m.alpha_);
  double raw_integral;
  if (spec.profile == ProfileKind::table) {
    raw_integral = theta_composite(spec.table_z, 4, [&](double th) {
      return m.raw_regular(std::cos(th)) * std::pow(std::sin(th), spec.d - 2.0);
    });
  } else {
    const QuadratureRule r = gauss_jacobi(8, gamma, gamma);
    raw_integral = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) raw_integral += r.w[i] * m.raw_regular(r.x[i]);
  }
  if (!(raw_integral > 0.0)) throw std::invalid_argument("angular profile integrates to zero");
  m.amplitude_ = 1.0 / (m.omega_ * raw_integral);

  if (spec.amplitude && std::abs(*spec.amplitude - m.amplitude_) > 1e-6 * m.amplitude_) {
    throw std::invalid_argument("explicit amplitude " + std::to_string(*spec.amplitude) +
                                " does not normalize the profile (expected " + std::to_string(m.amplitude_) + ")");
  }

  // Independent check of the sphere integral in the θ variable.
  {
    double check;
    if (m.alpha_ == 0.0) {
      check = theta_composite(spec.profile == ProfileKind::table ? spec.table_z : std::vector<double>{}, 8,
                              [&](double th) { return m.h(std::cos(th)) * std::pow(std::sin(th), spec.d - 2.0); });
    } else {
      const QuadratureRule r = gauss_jacobi(40, gamma, gamma);
      check = 0.0;
      for (std::size_t i = 0; i < r.size(); ++i) check += r.w[i] * m.h_regular(r.x[i]);
    }
    m.normalization_defect_ = m.omega_ * check - 1.0;
  }

  // Sampled monotonicity of h̄ on (0, 1).
  {
    const int samples = 2000;
    double prev = m.hbar(0.0);
    for (int i = 1; i < samples; ++i) {
      const double z = static_cast<double>(i) / samples;
      const double cur = m.hbar(z);
      if (cur < prev * (1.0 - 1e-12) - 1e-300) {
        throw std::invalid_argument("symmetrized profile must be nondecreasing on (0,1); decrease found near z=" +
                                    std::to_string(z));
      }
      prev = cur;
    }
  }
  return m;
}

double eval_kernel(const KernelModel& model, const Vec3& u, const Vec3& sigma, bool folded) {
  const double s2 = sigma[0] * sigma[0] + sigma[1] * sigma[1] + sigma[2] * sigma[2];
  if (std::abs(std::sqrt(s2) - 1.0) > 1e-9) throw std::invalid_argument("eval_kernel: sigma must be a unit vector");
  const double un = std::sqrt(u[0] * u[0] + u[1] * u[1] + u[2] * u[2]);
  if (un == 0.0) return 0.0;
  const double c = std::clamp((u[0] * sigma[0] + u[1] * sigma[1] + u[2] * sigma[2]) / un, -1.0, 1.0);
  const double speed = std::pow(un, model.beta());
  if (!folded) return speed * model.h(c);
  if (c <= 0.0) return 0.0;
  return speed * (model.h(c) + model.h(-c));
}

AkValue compute_ak_detailed(const KernelModel& model, double k) {
  if (!(k >= 0.0)) throw std::invalid_argument("compute_ak: k must be nonnegative");
  const double omega = model.omega();
  AkValue out;

  if (model.profile() == ProfileKind::table) {
    auto integrand = [&](double th) {
      const double c = std::cos(0.5 * th);
      return std::pow(c * c, k) * model.hbar(std::cos(th)) * std::pow(std::sin(th), model.d() - 2.0);
    };
    const double coarse = theta_composite(model.spec().table_z, 8, integrand);
    const double fine = theta_composite(model.spec().table_z, 16, integrand);
    out.value = 2.0 * omega * fine;
    out.error_estimate = 2.0 * omega * std::abs(fine - coarse);
    out.nodes = 16 * 16;
    return out;
  }

  // s = (1+z)/2; weight s^{ε/2-1+frac(k)} (1-s)^{ε/2-1}, integrand s^{floor(k)} H̄(2s-1).
  const double eps = model.epsilon_angular();
  const double kf = std::floor(k);
  const double frac = k - kf;
  auto evaluate = [&](int n) {
    const QuadratureRule r = gauss_jacobi_unit(n, 0.5 * eps - 1.0, 0.5 * eps - 1.0 + frac);
    double sum = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) {
      sum += r.w[i] * std::pow(r.x[i], kf) * model.hbar_regular(2.0 * r.x[i] - 1.0);
    }
    return 2.0 * omega * std::pow(2.0, eps - 1.0) * sum;
  };
  const int n = static_cast<int>(kf / 2.0) + 8;
  const double a = evaluate(n);
  const double b = evaluate(n + 8);
  out.value = b;
  out.error_estimate = std::abs(b - a);
  out.nodes = n + 8;
  if (!(out.error_estimate <= 1e-8 * std::abs(out.value) + 1e-300)) {
    throw std::runtime_error("compute_ak: quadrature did not converge at k=" + std::to_string(k) +
                             ", error estimate " + std::to_string(out.error_estimate));
  }
  return out;
}

double compute_ak(const KernelModel& model, double k) { return compute_ak_detailed(model, k).value; }

double ak_closed_form(const KernelModel& model, double k) {
  if (model.profile() == ProfileKind::table) return std::nan("");
  const double eps = model.epsilon_angular();
  return 2.0 * model.omega() * model.amplitude() * std::pow(2.0, eps - 1.0) *
         std::exp(log_beta(k + 0.5 * eps, 0.5 * eps));
}

double fit_ak_exponent(const KernelModel& model, double k1, double k2, int samples) {
  if (samples < 8) throw std::invalid_argument("fit_ak_exponent: at least 8 sample points required");
  if (!(k1 >= 10.0) || !(k2 >= 2.0 * k1)) throw std::invalid_argument("fit_ak_exponent: need k2 >= 2 k1 >= 20");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < samples; ++i) {
    const double lk = std::log(k1) + (std::log(k2) - std::log(k1)) * i / (samples - 1);
    const double la = std::log(compute_ak(model, std::exp(lk)));
    sx += lk;
    sy += la;
    sxx += lk * lk;
    sxy += lk * la;
  }
  return (samples * sxy - sx * sy) / (samples * sxx - sx * sx);
}

void load_profile_table(const std::string& path, KernelSpec& spec) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open profile table '" + path + "'");
  spec.table_z.clear();
  spec.table_h.clear();
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    double z, hv;
    if (!(ss >> z >> hv)) continue;  // header row
    spec.table_z.push_back(z);
    spec.table_h.push_back(hv);
  }
  spec.profile = ProfileKind::table;
}

}  // namespace boltz

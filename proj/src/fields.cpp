#include "boltz/fields.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "boltz/special.hpp"

namespace boltz {

std::array<int, 3> VelocityGrid::index(std::size_t flat) const {
  std::array<int, 3> idx{0, 0, 0};
  if (d == 3) {
    idx[2] = static_cast<int>(flat % n);
    flat /= n;
    idx[1] = static_cast<int>(flat % n);
    idx[0] = static_cast<int>(flat / n);
  } else {
    idx[1] = static_cast<int>(flat % n);
    idx[0] = static_cast<int>(flat / n);
  }
  return idx;
}

std::size_t VelocityGrid::flat(const std::array<int, 3>& idx) const {
  if (d == 3) return (std::size_t(idx[0]) * n + idx[1]) * n + idx[2];
  return std::size_t(idx[0]) * n + idx[1];
}

Vec3 VelocityGrid::velocity(std::size_t f) const {
  const auto idx = index(f);
  Vec3 v{coord(idx[0]), coord(idx[1]), 0.0};
  if (d == 3) v[2] = coord(idx[2]);
  return v;
}

VelocityGrid build_grid(int d, double vmax, int n, std::size_t cell_cap) {
  if (d != 2 && d != 3) throw std::invalid_argument("grid dimension must be 2 or 3");
  if (n < 2) throw std::invalid_argument("grid needs at least 2 points per axis");
  if (!(vmax > 0.0)) throw std::invalid_argument("vmax must be positive");
  const double cells = std::pow(static_cast<double>(n), d);
  if (cells > static_cast<double>(cell_cap)) {
    throw std::invalid_argument("grid of " + std::to_string(static_cast<long long>(cells)) +
                                " cells exceeds the configured cap; raise the cap to at least that value");
  }
  VelocityGrid g;
  g.d = d;
  g.n = n;
  g.vmax = vmax;
  g.dx = 2.0 * vmax / n;
  return g;
}

void require_same_grid(const Field& a, const Field& b, const char* where) {
  if (a.grid != b.grid || a.size() != b.size()) throw std::invalid_argument(std::string(where) + ": grid mismatch");
}

double norm2(const Vec3& v) { return v[0] * v[0] + v[1] * v[1] + v[2] * v[2]; }

double MaxwellianParams::log_value(const Vec3& v) const {
  return -a * norm2(v) + b[0] * v[0] + b[1] * v[1] + b[2] * v[2] + c;
}

double MaxwellianParams::value(const Vec3& v) const { return std::exp(log_value(v)); }

Field sample_maxwellian(const MaxwellianParams& params, const VelocityGrid& grid) {
  if (!(params.a > 0.0)) throw std::invalid_argument("Maxwellian coefficient a must be positive");
  Field f(grid);
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = params.value(grid.velocity(i));
  return f;
}

double moment(const Field& f, double k) {
  if (!(k >= 0.0)) throw std::invalid_argument("moment order must be nonnegative");
  double sum = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (f[i] == 0.0) continue;
    const double r2 = norm2(f.grid.velocity(i));
    sum += f[i] * (k == 0.0 ? 1.0 : std::pow(r2, k));
  }
  return sum * f.grid.cell_volume();
}

double total_mass(const Field& f) { return moment(f, 0.0); }

Vec3 total_momentum(const Field& f) {
  Vec3 p{0, 0, 0};
  for (std::size_t i = 0; i < f.size(); ++i) {
    const Vec3 v = f.grid.velocity(i);
    for (int k = 0; k < 3; ++k) p[k] += f[i] * v[k];
  }
  for (double& x : p) x *= f.grid.cell_volume();
  return p;
}

double l1_norm(const Field& f) {
  double s = 0.0;
  for (double x : f.values) s += std::abs(x);
  return s * f.grid.cell_volume();
}

double weighted_l1(const Field& f, double k) {
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) s += std::abs(f[i]) * std::pow(1.0 + norm2(f.grid.velocity(i)), k);
  return s * f.grid.cell_volume();
}

std::vector<double> index_set(double beta, double k_max) {
  std::vector<double> ks;
  const double step = 0.5 * beta;
  for (int j = 0; j <= static_cast<int>(std::floor(k_max)); ++j) {
    for (int l = 0;; ++l) {
      const double k = j + step * l;
      if (k > k_max + 1e-12) break;
      ks.push_back(k);
    }
  }
  std::sort(ks.begin(), ks.end());
  std::vector<double> out;
  for (double k : ks) {
    if (out.empty() || k - out.back() > 1e-9) out.push_back(k);
  }
  return out;
}

int MomentLedger::find(double kv) const {
  for (std::size_t i = 0; i < k.size(); ++i) {
    if (std::abs(k[i] - kv) <= 1e-9) return static_cast<int>(i);
  }
  return -1;
}

double MomentLedger::z_at(double kv) const {
  const int i = find(kv);
  if (i < 0) throw std::invalid_argument("moment ledger has no entry for k=" + std::to_string(kv));
  return z[i];
}

double MomentLedger::m_at(double kv) const {
  const int i = find(kv);
  if (i < 0) throw std::invalid_argument("moment ledger has no entry for k=" + std::to_string(kv));
  return m[i];
}

MomentLedger normalized_moments(const Field& f, const std::vector<double>& ks, double b_norm) {
  if (!(b_norm > 0.0)) throw std::invalid_argument("b_norm must be positive");
  MomentLedger led;
  led.b_norm = b_norm;
  led.k = ks;
  for (double k : ks) {
    const double mk = moment(f, k);
    led.m.push_back(mk);
    if (k > 20.0) {
      led.z.push_back(mk > 0.0 ? std::exp(std::log(mk) - log_gamma(k + b_norm)) : 0.0);
    } else {
      led.z.push_back(mk / gamma_fn(k + b_norm));
    }
  }
  return led;
}

WeightedRatio weighted_ratio_integral(const Field& f, const MaxwellianParams& M, RatioWeight weight,
                                      double eps_exponent, int partial_terms) {
  WeightedRatio out;
  double sum = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (f[i] < 0.0) throw std::invalid_argument("weighted_ratio_integral: field must be nonnegative");
    if (f[i] == 0.0) continue;
    const Vec3 v = f.grid.velocity(i);
    const double w = weight == RatioWeight::one ? 1.0 : 1.0 + std::pow(std::sqrt(norm2(v)), eps_exponent);
    sum += w * std::exp(std::log(f[i]) - M.log_value(v));
  }
  out.value = sum * f.grid.cell_volume();
  if (M.b == Vec3{0.0, 0.0, 0.0} && weight == RatioWeight::one) {
    double acc = 0.0;
    for (int k = 0; k <= partial_terms; ++k) {
      acc += moment(f, k) * std::exp(k * std::log(M.a) - log_gamma(k + 1.0) - M.c);
      out.partial_sums.push_back(acc);
    }
  }
  return out;
}

InterpolationMargin verify_moment_interpolation(const Field& f, double k1, double k, double k2) {
  if (!(k1 > 0.0 && k1 <= k && k <= k2)) throw std::invalid_argument("need 0 < k1 <= k <= k2");
  for (double x : f.values) {
    if (x < 0.0) throw std::invalid_argument("verify_moment_interpolation: negative field value");
  }
  const double m0 = moment(f, 0.0);
  if (!(m0 > 0.0)) throw std::invalid_argument("verify_moment_interpolation: zero mass");
  auto g = [&](double kk) { return std::pow(moment(f, kk) / m0, 1.0 / kk); };
  const double a = g(k1), b = g(k), c = g(k2);
  InterpolationMargin out;
  out.lower_slack = b - a;
  out.upper_slack = c - b;
  const double tol = 1e-12 * std::max({a, b, c, 1e-300});
  out.holds = out.lower_slack >= -tol && out.upper_slack >= -tol;
  return out;
}

namespace {

void put_u32(std::ofstream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xffu);
  out.write(reinterpret_cast<const char*>(b), 4);
}

void put_f64(std::ofstream& out, double x) {
  const auto bits = std::bit_cast<std::uint64_t>(x);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xffu);
  out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint32_t get_u32(const unsigned char* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= std::uint32_t(p[i]) << (8 * i);
  return v;
}

double get_f64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t(p[i]) << (8 * i);
  return std::bit_cast<double>(v);
}

}  // namespace

void write_field_binary(const Field& f, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write field file '" + path + "'");
  out.write("BFLD", 4);
  put_u32(out, static_cast<std::uint32_t>(f.grid.d));
  put_u32(out, static_cast<std::uint32_t>(f.grid.n));
  put_u32(out, 0);
  put_f64(out, f.grid.vmax);
  put_f64(out, 0.0);
  for (double x : f.values) put_f64(out, x);
}

Field read_field_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open field file '" + path + "'");
  unsigned char header[32];
  if (!in.read(reinterpret_cast<char*>(header), 32)) throw std::invalid_argument("field file too short");
  if (std::memcmp(header, "BFLD", 4) != 0) throw std::invalid_argument("field file has wrong magic");
  const int d = static_cast<int>(get_u32(header + 4));
  const int n = static_cast<int>(get_u32(header + 8));
  const double vmax = get_f64(header + 16);
  Field f(build_grid(d, vmax, n));
  std::vector<unsigned char> buf(8 * f.size());
  if (!in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()))) {
    throw std::invalid_argument("field file truncated");
  }
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = get_f64(buf.data() + 8 * i);
  return f;
}

void write_field_csv(const Field& f, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out.precision(17);
  out << (f.grid.d == 3 ? "v0,v1,v2,f\n" : "v0,v1,f\n");
  for (std::size_t i = 0; i < f.size(); ++i) {
    const Vec3 v = f.grid.velocity(i);
    out << v[0] << ',' << v[1];
    if (f.grid.d == 3) out << ',' << v[2];
    out << ',' << f[i] << '\n';
  }
}

}  // namespace boltz

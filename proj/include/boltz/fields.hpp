#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "boltz/kernel.hpp"

namespace boltz {

struct VelocityGrid {
  int d = 3;
  int n = 0;
  double vmax = 0.0;
  double dx = 0.0;

  std::size_t size() const { return d == 3 ? std::size_t(n) * n * n : std::size_t(n) * n; }
  double cell_volume() const { return d == 3 ? dx * dx * dx : dx * dx; }
  double coord(int i) const { return -vmax + (i + 0.5) * dx; }
  // Row-major, axis 0 slowest. Unused components are zero for d = 2.
  std::array<int, 3> index(std::size_t flat) const;
  std::size_t flat(const std::array<int, 3>& idx) const;
  Vec3 velocity(std::size_t flat) const;

  bool operator==(const VelocityGrid& o) const { return d == o.d && n == o.n && vmax == o.vmax; }
  bool operator!=(const VelocityGrid& o) const { return !(*this == o); }
};

inline constexpr std::size_t kDefaultCellCap = std::size_t(1) << 24;

VelocityGrid build_grid(int d, double vmax, int n, std::size_t cell_cap = kDefaultCellCap);

struct Field {
  VelocityGrid grid;
  std::vector<double> values;

  Field() = default;
  explicit Field(const VelocityGrid& g, double fill = 0.0) : grid(g), values(g.size(), fill) {}

  std::size_t size() const { return values.size(); }
  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }
};

void require_same_grid(const Field& a, const Field& b, const char* where);

// M(v) = exp(-a|v|² + b·v + c).
struct MaxwellianParams {
  double a = 1.0;
  Vec3 b{0.0, 0.0, 0.0};
  double c = 0.0;

  double log_value(const Vec3& v) const;
  double value(const Vec3& v) const;
};

Field sample_maxwellian(const MaxwellianParams& params, const VelocityGrid& grid);

double norm2(const Vec3& v);

double moment(const Field& f, double k);
double total_mass(const Field& f);
Vec3 total_momentum(const Field& f);
double l1_norm(const Field& f);
double weighted_l1(const Field& f, double k);  // ∫|f| (1+|v|²)^k

// J = {j + (β/2) l} ∩ [0, k_max], sorted, duplicates merged.
std::vector<double> index_set(double beta, double k_max);

struct MomentLedger {
  double b_norm = 1.0;
  std::vector<double> k;
  std::vector<double> m;
  std::vector<double> z;

  // Index of k within the ledger, or -1.
  int find(double kv) const;
  double z_at(double kv) const;
  double m_at(double kv) const;
};

MomentLedger normalized_moments(const Field& f, const std::vector<double>& ks, double b_norm);

enum class RatioWeight { one, w_eps };

struct WeightedRatio {
  double value = 0.0;
  std::vector<double> partial_sums;  // Σ_{k<=K} m_k a^k / k! e^{-c}, K = 0..
};

WeightedRatio weighted_ratio_integral(const Field& f, const MaxwellianParams& M, RatioWeight weight,
                                      double eps_exponent = 0.0, int partial_terms = 12);

struct InterpolationMargin {
  double lower_slack = 0.0;  // (m_k/m0)^{1/k} - (m_{k1}/m0)^{1/k1}
  double upper_slack = 0.0;  // (m_{k2}/m0)^{1/k2} - (m_k/m0)^{1/k}
  bool holds = false;
};

InterpolationMargin verify_moment_interpolation(const Field& f, double k1, double k, double k2);

// Binary container: "BFLD", uint32 d, uint32 N, uint32 reserved, float64 vmax,
// 8 reserved bytes, then little-endian float64 values in row-major order.
void write_field_binary(const Field& f, const std::string& path);
Field read_field_binary(const std::string& path);
void write_field_csv(const Field& f, const std::string& path);

}  // namespace boltz

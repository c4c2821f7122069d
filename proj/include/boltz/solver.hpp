#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "boltz/barrier.hpp"
#include "boltz/collision.hpp"
#include "boltz/fields.hpp"
#include "boltz/kernel.hpp"
#include "boltz/moments.hpp"

namespace boltz {

enum class InitialKind { maxwellian, scaled_maxwellian, mixture, file };

std::string to_string(InitialKind kind);
InitialKind initial_from_string(const std::string& name);

struct MaxwellianComponent {
  MaxwellianParams params;
  double weight = 1.0;
};

struct InitialCondition {
  InitialKind kind = InitialKind::maxwellian;
  std::vector<MaxwellianComponent> components;
  std::string path;
};

Field make_initial_field(const InitialCondition& init, const VelocityGrid& grid);

struct Scenario {
  KernelSpec kernel;
  int d = 3;
  int n = 11;
  double vmax = 6.0;
  int nz = 4;
  int nphi = 8;
  Interpolation interpolation = Interpolation::maxwellian_ratio;
  InitialCondition initial;
  double dt = 0.0;  // 0 selects 0.25 / ν_max
  int steps = 100;
  bool project = true;
  int cadence = 1;
  double moment_k_max = 6.0;
  std::optional<BarrierInputs> barrier;
};

struct SolverState {
  Field f;
  double t = 0.0;
  int step = 0;
  std::size_t clamped = 0;
  double mass_drift = 0.0;    // largest per-step relative change
  double energy_drift = 0.0;
};

class NumericAbort : public std::runtime_error {
 public:
  NumericAbort(const std::string& what, SolverState last_good)
      : std::runtime_error(what), last_good_(std::move(last_good)) {}
  const SolverState& last_good() const { return last_good_; }

 private:
  SolverState last_good_;
};

double max_frequency(const Field& f, const CollisionOperator& op);
double default_time_step(const Field& f, const CollisionOperator& op);

// Heun step; negative cells are set to zero and counted.
void step(SolverState& state, double dt, const CollisionOperator& op, bool project);

double h_functional(const Field& f);
double sup_ratio(const Field& f, const MaxwellianParams& M);

struct DiagnosticsRecord {
  double t = 0.0;
  double m0 = 0.0;
  double m1 = 0.0;
  double h = 0.0;
  double sup_ratio = 0.0;  // NaN when no barrier is configured
  double min_f = 0.0;
  std::size_t clamped = 0;
  MomentLedger ledger;
};

DiagnosticsRecord diagnose(const SolverState& s, const std::vector<double>& ks, double b_norm,
                           const std::optional<MaxwellianParams>& barrier);

struct RunResult {
  std::vector<DiagnosticsRecord> records;
  SolverState final_state;
  std::optional<BarrierCertificate> certificate;
  double dt = 0.0;
  double dt_nu_max = 0.0;
  std::vector<double> ks;
  double b_norm = 0.0;

  MomentSeries moment_series() const;
};

KernelModel scenario_kernel(const Scenario& sc);
VelocityGrid scenario_grid(const Scenario& sc);

// Uses op when given, otherwise builds one from the scenario.
RunResult run(const Scenario& sc, const CollisionOperator* op = nullptr);

void write_diagnostics_csv(const RunResult& r, const std::string& path);

// Reads the z_k columns of a diagnostics CSV back into a series; m_k = z_k Γ(k+b).
MomentSeries read_moment_series_csv(const std::string& path, double b_norm);

}  // namespace boltz

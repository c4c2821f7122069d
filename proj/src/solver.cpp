#include "boltz/solver.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <memory>
#include <sstream>

#include "boltz/special.hpp"

namespace boltz {

std::string to_string(InitialKind kind) {
  switch (kind) {
    case InitialKind::maxwellian: return "maxwellian";
    case InitialKind::scaled_maxwellian: return "scaled_maxwellian";
    case InitialKind::mixture: return "mixture";
    case InitialKind::file: return "file";
  }
  return "unknown";
}

InitialKind initial_from_string(const std::string& name) {
  if (name == "maxwellian") return InitialKind::maxwellian;
  if (name == "scaled_maxwellian") return InitialKind::scaled_maxwellian;
  if (name == "mixture") return InitialKind::mixture;
  if (name == "file") return InitialKind::file;
  throw std::invalid_argument("unknown initial kind '" + name + "'");
}

Field make_initial_field(const InitialCondition& init, const VelocityGrid& grid) {
  if (init.kind == InitialKind::file) {
    Field f = read_field_binary(init.path);
    if (f.grid != grid) throw std::invalid_argument("initial field file does not match the scenario grid");
    return f;
  }
  if (init.components.empty()) throw std::invalid_argument("initial condition needs at least one Maxwellian");
  if (init.kind != InitialKind::mixture && init.components.size() != 1) {
    throw std::invalid_argument("only a mixture may list several Maxwellians");
  }
  Field f(grid);
  for (const auto& c : init.components) {
    if (!(c.weight > 0.0)) throw std::invalid_argument("Maxwellian weights must be positive");
    const Field m = sample_maxwellian(c.params, grid);
    for (std::size_t i = 0; i < f.size(); ++i) f[i] += c.weight * m[i];
  }
  return f;
}

double max_frequency(const Field& f, const CollisionOperator& op) {
  const Field nu = op.frequency(f);
  return *std::max_element(nu.values.begin(), nu.values.end());
}

double default_time_step(const Field& f, const CollisionOperator& op) {
  const double nm = max_frequency(f, op);
  if (!(nm > 0.0)) throw std::invalid_argument("collision frequency vanishes, no default time step");
  return 0.25 / nm;
}

namespace {

Field rate(const Field& f, const CollisionOperator& op, bool project) {
  Field q = op.collision(f);
  if (project) {
    Field w = f;
    for (double& x : w.values) x = std::max(x, 0.0);
    q = project_conserved(q, w);
  }
  return q;
}

bool finite(const Field& f) {
  for (double x : f.values) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

}  // namespace

void step(SolverState& state, double dt, const CollisionOperator& op, bool project) {
  const Field& f = state.f;
  if (!finite(f)) throw NumericAbort("non-finite value in the state at t = " + std::to_string(state.t), state);
  const double m0 = total_mass(f), e0 = moment(f, 1.0);
  const Field k1 = rate(f, op, project);
  Field f1 = f;
  for (std::size_t i = 0; i < f.size(); ++i) f1[i] += dt * k1[i];
  if (!finite(f1)) throw NumericAbort("non-finite value in the predictor stage at t = " + std::to_string(state.t), state);
  const Field k2 = rate(f1, op, project);
  Field next = f;
  for (std::size_t i = 0; i < f.size(); ++i) next[i] += 0.5 * dt * (k1[i] + k2[i]);
  if (!finite(next)) throw NumericAbort("non-finite value in the corrector stage at t = " + std::to_string(state.t), state);
  for (double& x : next.values) {
    if (x < 0.0) {
      x = 0.0;
      ++state.clamped;
    }
  }
  const double m1 = total_mass(next), e1 = moment(next, 1.0);
  if (m0 != 0.0) state.mass_drift = std::max(state.mass_drift, std::abs(m1 - m0) / std::abs(m0));
  if (e0 != 0.0) state.energy_drift = std::max(state.energy_drift, std::abs(e1 - e0) / std::abs(e0));
  state.f = std::move(next);
  state.t += dt;
  ++state.step;
}

double h_functional(const Field& f) {
  double h = 0.0;
  for (double x : f.values) {
    if (x > 0.0) h += x * std::log(x);
  }
  return h * f.grid.cell_volume();
}

double sup_ratio(const Field& f, const MaxwellianParams& M) {
  double best = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (f[i] <= 0.0) continue;
    best = std::max(best, std::exp(std::log(f[i]) - M.log_value(f.grid.velocity(i))));
  }
  return best;
}

DiagnosticsRecord diagnose(const SolverState& s, const std::vector<double>& ks, double b_norm,
                           const std::optional<MaxwellianParams>& barrier) {
  DiagnosticsRecord r;
  r.t = s.t;
  r.m0 = total_mass(s.f);
  r.m1 = moment(s.f, 1.0);
  r.h = h_functional(s.f);
  r.sup_ratio = barrier ? sup_ratio(s.f, *barrier) : std::numeric_limits<double>::quiet_NaN();
  r.min_f = *std::min_element(s.f.values.begin(), s.f.values.end());
  r.clamped = s.clamped;
  r.ledger = normalized_moments(s.f, ks, b_norm);
  return r;
}

MomentSeries RunResult::moment_series() const {
  MomentSeries s;
  for (const auto& r : records) {
    s.t.push_back(r.t);
    s.ledgers.push_back(r.ledger);
  }
  return s;
}

KernelModel scenario_kernel(const Scenario& sc) {
  KernelSpec spec = sc.kernel;
  spec.d = sc.d;
  return normalize_kernel(spec);
}

VelocityGrid scenario_grid(const Scenario& sc) { return build_grid(sc.d, sc.vmax, sc.n); }

RunResult run(const Scenario& sc, const CollisionOperator* op) {
  if (sc.steps < 0) throw std::invalid_argument("steps must be nonnegative");
  if (sc.cadence < 1) throw std::invalid_argument("cadence must be at least 1");
  std::unique_ptr<CollisionOperator> owned;
  const KernelModel kernel = op ? op->kernel() : scenario_kernel(sc);
  if (!op) {
    const VelocityGrid grid = scenario_grid(sc);
    owned = std::make_unique<CollisionOperator>(kernel, grid, make_angular_quadrature(kernel, sc.nz, sc.nphi, true),
                                                sc.interpolation);
    op = owned.get();
  }
  RunResult res;
  SolverState state;
  state.f = make_initial_field(sc.initial, op->grid());

  const double numax = max_frequency(state.f, *op);
  res.dt = sc.dt > 0.0 ? sc.dt : 0.25 / numax;
  res.dt_nu_max = res.dt * numax;
  if (res.dt_nu_max > 0.5) {
    throw std::invalid_argument("dt*nu_max = " + std::to_string(res.dt_nu_max) + " exceeds 0.5");
  }
  res.ks = index_set(kernel.beta(), sc.moment_k_max);
  res.b_norm = 0.25 * kernel.epsilon_angular();

  std::optional<MaxwellianParams> barrier;
  if (sc.barrier) {
    res.certificate = build_barrier(*sc.barrier, kernel);
    barrier = res.certificate->barrier();
  }

  res.records.push_back(diagnose(state, res.ks, res.b_norm, barrier));
  for (int s = 0; s < sc.steps; ++s) {
    step(state, res.dt, *op, sc.project);
    if (state.step % sc.cadence == 0 || s + 1 == sc.steps) {
      res.records.push_back(diagnose(state, res.ks, res.b_norm, barrier));
    }
  }
  res.final_state = std::move(state);
  return res;
}

void write_diagnostics_csv(const RunResult& r, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "t,m0,m1,H,sup_ratio,min_f";
  for (double k : r.ks) out << ",z_" << k;
  out << '\n' << std::setprecision(17);
  for (const auto& rec : r.records) {
    out << rec.t << ',' << rec.m0 << ',' << rec.m1 << ',' << rec.h << ',' << rec.sup_ratio << ',' << rec.min_f;
    for (double z : rec.ledger.z) out << ',' << z;
    out << '\n';
  }
}

MomentSeries read_moment_series_csv(const std::string& path, double b_norm) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open moment series '" + path + "'");
  auto split = [](const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
    return cells;
  };
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("moment series '" + path + "' is empty");
  const auto header = split(line);
  if (header.empty() || header[0] != "t") throw std::invalid_argument("moment series must start with a t column");
  std::vector<std::size_t> cols;
  std::vector<double> ks;
  for (std::size_t i = 1; i < header.size(); ++i) {
    if (header[i].rfind("z_", 0) != 0) continue;
    cols.push_back(i);
    ks.push_back(std::stod(header[i].substr(2)));
  }
  if (ks.empty()) throw std::invalid_argument("moment series has no z_k columns");
  MomentSeries s;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != header.size()) throw std::invalid_argument("moment series row has the wrong number of columns");
    MomentLedger led;
    led.b_norm = b_norm;
    led.k = ks;
    for (std::size_t j = 0; j < cols.size(); ++j) {
      const double z = std::stod(cells[cols[j]]);
      led.z.push_back(z);
      led.m.push_back(z * gamma_fn(ks[j] + b_norm));
    }
    s.t.push_back(std::stod(cells[0]));
    s.ledgers.push_back(std::move(led));
  }
  return s;
}

}  // namespace boltz

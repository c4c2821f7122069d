// boltz: scenario driver for the homogeneous Boltzmann toolkit.
//
//   boltz <run|barrier|moments-verify|collision-check|kernel-table> --scenario FILE --out DIR
//
// Exit codes: 0 all checks pass, 1 a check failed, 2 usage or scenario error, 3 numeric abort.

#include <CLI11.hpp>
#include <json.hpp>

#include <Eigen/Core>
#include <boost/version.hpp>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "boltz/barrier.hpp"
#include "boltz/collision.hpp"
#include "boltz/estimates.hpp"
#include "boltz/moments.hpp"
#include "boltz/parallel.hpp"
#include "boltz/sampling.hpp"
#include "boltz/scenario.hpp"
#include "boltz/solver.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace boltz;

namespace {

constexpr const char* kVersion = "0.1.0";

struct Options {
  std::string scenario;
  std::string out = "out";
  int workers = 0;
  std::uint64_t seed = 12345;
  double tolerance_scale = 1.0;
  std::string series;
};

// A check records its value next to the tolerance it was judged against.
struct Report {
  json checks = json::object();
  bool pass = true;

  void add(const std::string& name, double value, double tolerance, bool ok, json extra = json::object()) {
    extra["value"] = value;
    extra["tolerance"] = tolerance;
    extra["pass"] = ok;
    checks[name] = std::move(extra);
    pass = pass && ok;
  }
};

void write_json(const json& j, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << std::setw(2) << j << '\n';
}

json manifest_base(const std::string& command, const Options& opt, const ScenarioFile& sf) {
  json m;
  m["command"] = command;
  m["scenario_path"] = opt.scenario;
  m["scenario"] = sf.echo;
  m["seed"] = opt.seed;
  m["workers"] = worker_count();
  m["tolerance_scale"] = opt.tolerance_scale;
  m["versions"] = {{"boltz", kVersion},
                   {"compiler", __VERSION__},
                   {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                 std::to_string(EIGEN_MINOR_VERSION)},
                   {"boost", BOOST_LIB_VERSION}};
  return m;
}

std::unique_ptr<CollisionOperator> make_operator(const Scenario& sc, const KernelModel& kernel) {
  return std::make_unique<CollisionOperator>(kernel, scenario_grid(sc),
                                             make_angular_quadrature(kernel, sc.nz, sc.nphi, true), sc.interpolation);
}

int cmd_run(const Options& opt, const ScenarioFile& sf, json& manifest, Report& rep) {
  const Scenario& sc = sf.scenario;
  const KernelModel kernel = scenario_kernel(sc);
  auto op = make_operator(sc, kernel);
  const RunResult r = run(sc, op.get());
  const fs::path out(opt.out);
  write_diagnostics_csv(r, (out / "diagnostics.csv").string());
  write_field_binary(r.final_state.f, (out / "field.bin").string());
  manifest["dt"] = r.dt;
  manifest["dt_nu_max"] = r.dt_nu_max;
  manifest["clamped"] = r.final_state.clamped;

  const double ts = opt.tolerance_scale;
  if (sc.project) {
    rep.add("mass_drift_per_step", r.final_state.mass_drift, 1e-12 * ts, r.final_state.mass_drift <= 1e-12 * ts);
    rep.add("energy_drift_per_step", r.final_state.energy_drift, 1e-12 * ts, r.final_state.energy_drift <= 1e-12 * ts);
  } else {
    const double m = std::abs(r.records.back().m0 / r.records.front().m0 - 1.0);
    const double e = std::abs(r.records.back().m1 / r.records.front().m1 - 1.0);
    rep.add("mass_drift_total", m, 1e-2 * ts, m <= 1e-2 * ts);
    rep.add("energy_drift_total", e, 1e-2 * ts, e <= 1e-2 * ts);
  }
  double worst_h = 0.0;
  for (std::size_t i = 1; i < r.records.size(); ++i) {
    const double slack = 1e-8 * std::abs(r.records[i - 1].h);
    worst_h = std::max(worst_h, (r.records[i].h - r.records[i - 1].h) / std::max(slack, 1e-300));
  }
  rep.add("entropy_increase_over_slack", worst_h, 1.0 * ts, worst_h <= 1.0 * ts);
  const double cf = double(r.final_state.clamped) / double(std::max<std::size_t>(1, r.final_state.f.size() * std::max(1, sc.steps)));
  rep.add("clamp_fraction", cf, 1e-3 * ts, cf <= 1e-3 * ts);
  if (r.certificate) {
    double sup = 0.0;
    for (const auto& rec : r.records) sup = std::max(sup, rec.sup_ratio);
    rep.add("sup_f_over_barrier", sup, 1.05, sup <= 1.05 * ts);
    write_json(to_json(*r.certificate), out / "certificate.json");
  }
  return 0;
}

int cmd_barrier(const Options& opt, const ScenarioFile& sf, json&, Report& rep) {
  const Scenario& sc = sf.scenario;
  if (!sc.barrier) throw ScenarioError("the barrier subcommand needs a barrier section");
  const KernelModel kernel = scenario_kernel(sc);
  auto op = make_operator(sc, kernel);
  const BarrierCertificate cert = build_barrier(*sc.barrier, kernel);
  const Field f0 = make_initial_field(sc.initial, op->grid());
  const BarrierCheck chk = check_barrier_inequality(f0, cert, *op, sf.verify.tail_delta, sf.verify.tail_eta);

  json j = to_json(cert);
  j["L_grid_search"] = compute_L_search(cert.inputs.a1, cert.inputs.c1, cert.beta);
  j["R_equation_residual"] = r_equation_residual(cert.R, cert.C, cert.L * cert.inputs.C1, cert.inputs.rho0, cert.beta, cert.eps);
  j["hypotheses"] = {{"mass", chk.hypotheses.mass},
                     {"sup_f", chk.hypotheses.sup_f},
                     {"weighted_mass", chk.hypotheses.weighted_mass},
                     {"density_ok", chk.hypotheses.density_ok},
                     {"sup_ok", chk.hypotheses.sup_ok},
                     {"weighted_ok", chk.hypotheses.weighted_ok},
                     {"note", chk.note}};
  auto tail = [](const TailReport& t) {
    return json{{"radius", t.radius}, {"cells", t.cells}, {"failures", t.failures}, {"worst_excess", t.worst_excess}, {"pass", t.pass}};
  };
  j["tail"] = tail(chk.tail);
  j["tail_observed"] = tail(chk.tail_observed);
  j["C_observed"] = chk.c_observed;
  j["R_observed"] = chk.r_observed;
  j["in_ball_worst_ratio"] = chk.in_ball_worst;
  j["ball_min_f"] = chk.ball_min_f;
  j["delta"] = chk.delta;
  j["eta_scale"] = chk.eta_scale;

  rep.add("hypotheses_applicable", chk.applicable ? 1.0 : 0.0, 1.0, chk.applicable, {{"note", chk.note}});
  rep.add("tail_inequality_failures", double(chk.tail.failures), 0.0, chk.tail.pass,
          {{"delta", chk.delta}, {"eta_scale", chk.eta_scale}, {"cells", chk.tail.cells}});
  rep.add("in_ball_sup_f_over_M", chk.in_ball_worst, 1.0, chk.in_ball);
  const double lres = std::abs(j["L_grid_search"].get<double>() / cert.L - 1.0);
  rep.add("L_grid_cross_check", lres, 1e-6 * opt.tolerance_scale, lres <= 1e-6 * opt.tolerance_scale);
  const double rres = std::abs(j["R_equation_residual"].get<double>());
  rep.add("R_equation_residual", rres, 1e-10 * opt.tolerance_scale, rres <= 1e-10 * opt.tolerance_scale);

  Field u0 = sample_maxwellian(MaxwellianParams{cert.inputs.a, {0, 0, 0}, 0.0}, op->grid());
  for (double& x : u0.values) x = -x;
  const double dt = sf.verify.linear_dt_nu / max_frequency(f0, *op);
  const LinearOrderVerdict lin = evolve_linear_order_check(f0, u0, dt, sf.verify.linear_steps, *op);
  j["linear_order"] = {{"dt_nu_max", lin.dt_nu_max}, {"steps", lin.steps}, {"worst_positive", lin.worst_positive},
                       {"worst_mass_drift", lin.worst_mass_drift}};
  rep.add("linear_order_max_u", lin.worst_positive, 1e-12, lin.pass);
  rep.add("linear_mass_drift_per_step", lin.worst_mass_drift, 1e-12 * opt.tolerance_scale,
          lin.worst_mass_drift <= 1e-12 * opt.tolerance_scale);
  j["checks"] = rep.checks;
  write_json(j, fs::path(opt.out) / "certificate.json");
  return 0;
}

int cmd_moments(const Options& opt, const ScenarioFile& sf, json& manifest, Report& rep) {
  const Scenario& sc = sf.scenario;
  const KernelModel kernel = scenario_kernel(sc);
  auto op = make_operator(sc, kernel);
  const double b_norm = 0.25 * kernel.epsilon_angular();
  MomentSeries series;
  if (opt.series.empty()) {
    const RunResult r = run(sc, op.get());
    write_diagnostics_csv(r, (fs::path(opt.out) / "diagnostics.csv").string());
    write_field_binary(r.final_state.f, (fs::path(opt.out) / "field.bin").string());
    manifest["dt"] = r.dt;
    series = r.moment_series();
  } else {
    series = read_moment_series_csv(opt.series, b_norm);
    manifest["series"] = opt.series;
    if (series.ledgers.empty()) throw std::invalid_argument("moment series has no rows");
  }

  const Field f0 = make_initial_field(sc.initial, op->grid());
  SystemOptions so;
  so.k_max = sc.moment_k_max;
  so.b_norm = b_norm;
  const MomentSystemConstants sys = system_constants(kernel, f0, *op, so);
  const GrowthConstants gc = growth_constants(sys, series.ledgers.front(), sf.verify.k_limit);
  const GrowthCertificate cert = verify_geometric_bound(series, sys, gc.c, gc.q, sf.verify.k_limit);
  const auto table = lower_moment_constants(kernel);
  const auto lower = verify_lower_moments(series, table);

  json j;
  j["system"] = {{"beta", sys.beta}, {"eps", sys.eps}, {"b", sys.b_norm}, {"C_b", sys.c_b}, {"c_nu", sys.c_nu},
                 {"nu_min_ratio", sys.nu_min_ratio}, {"nu0", sys.nu0}, {"m0", sys.m0}, {"k_star", sys.k_star},
                 {"A_bar", sys.a_bar}, {"B_bar", sys.b_bar}, {"c0", sys.c0}};
  for (std::size_t i = 0; i < sys.k.size(); ++i) {
    j["system"]["per_k"].push_back({{"k", sys.k[i]}, {"a_k", sys.a[i]}, {"A_k", sys.big_a[i]}, {"B_k", sys.big_b[i]}});
  }
  j["C"] = gc.c;
  j["q"] = gc.q;
  for (const auto& v : cert.per_k) {
    j["per_k"].push_back({{"k", v.k}, {"pass", v.pass}, {"lower_ratio_condition", v.ratio_condition},
                          {"worst_slack", v.worst_slack}, {"worst_bound_ratio", v.worst_bound}});
  }
  if (cert.failed) j["failure"] = {{"k", cert.fail_k}, {"t", cert.fail_t}, {"reason", cert.fail_reason}};
  rep.add("geometric_bound", cert.pass ? 1.0 : 0.0, 1.0, cert.pass, {{"k_limit", sf.verify.k_limit}});
  for (const auto& lv : lower) {
    j["lower_moments"].push_back({{"alpha", lv.alpha}, {"c_alpha", lv.c_alpha}, {"worst_ratio", lv.worst_ratio}});
    std::ostringstream name;
    name << "lower_moment_" << lv.alpha;
    rep.add(name.str(), lv.worst_ratio, lv.c_alpha, lv.pass);
  }
  j["checks"] = rep.checks;
  write_json(j, fs::path(opt.out) / "certificate.json");
  return 0;
}

int cmd_collision(const Options& opt, const ScenarioFile& sf, json&, Report& rep) {
  const Scenario& sc = sf.scenario;
  const VerifyOptions& vo = sf.verify;
  const double ts = opt.tolerance_scale;
  const KernelModel kernel = scenario_kernel(sc);
  auto op = make_operator(sc, kernel);
  const VelocityGrid& grid = op->grid();

  MaxwellianParams eq = sc.initial.components.empty() ? MaxwellianParams{} : sc.initial.components.front().params;
  const Field M = sample_maxwellian(eq, grid);
  const Field q = op->collision(M);
  const double resid = l1_norm(q) / l1_norm(op->loss(M, M));
  rep.add("equilibrium_residual", resid, 0.05 * ts, resid <= 0.05 * ts);

  const Field f0 = make_initial_field(sc.initial, grid);
  const Field qs = op->gain(f0, f0);
  PlaneQuadrature pq;
  pq.nr = vo.plane_nr;
  pq.nphi = vo.plane_nphi;
  const CarlemanResult qc = q_plus_carleman(f0, f0, kernel, pq, sc.interpolation);
  Field diff = qs;
  for (std::size_t i = 0; i < diff.size(); ++i) diff[i] -= qc.q[i];
  const double rep_gap = l1_norm(diff) / l1_norm(qs);
  rep.add("sigma_vs_carleman", rep_gap, 0.05 * ts, rep_gap <= 0.05 * ts);

  Rng rng(opt.seed);
  double worst_gain = std::numeric_limits<double>::infinity();
  double worst_diss = -std::numeric_limits<double>::infinity();
  double worst_holder = -std::numeric_limits<double>::infinity();
  const MaxwellianParams Mw{0.5, {0, 0, 0}, 0.0};
  for (int s = 0; s < vo.samples; ++s) {
    const Field f = random_nonnegative_field(grid, rng);
    const GainBoundReport g = verify_weighted_gain_bound(f, Mw, *op);
    worst_gain = std::min(worst_gain, g.rhs > 0.0 ? g.margin / g.rhs : 0.0);
    const Field u = random_signed_field(grid, rng);
    const DissipativityValue dv = dissipativity_functional(f, u, *op);
    worst_diss = std::max(worst_diss, dv.sign_form / dv.scale);
    const Field g2 = random_nonnegative_field(grid, rng);
    const HolderGap hg = holder_gap(f, g2, vo.holder_p, vo.holder_k, *op);
    worst_holder = std::max(worst_holder, hg.lhs / hg.rhs);
  }
  rep.add("weighted_gain_relative_margin", worst_gain, 0.0, worst_gain > 0.0, {{"samples", vo.samples}});
  rep.add("dissipativity_over_scale", worst_diss, 1e-8 * ts, worst_diss <= 1e-8 * ts, {{"samples", vo.samples}});
  rep.add("holder_lhs_over_rhs", worst_holder, 1.0, worst_holder <= 1.0, {{"samples", vo.samples}});

  json j;
  j["carleman_skipped_cells"] = qc.skipped;
  j["checks"] = rep.checks;
  write_json(j, fs::path(opt.out) / "certificate.json");
  return 0;
}

int cmd_kernel_table(const Options& opt, const ScenarioFile& sf, json&, Report& rep) {
  const KernelModel kernel = scenario_kernel(sf.scenario);
  std::ofstream out(fs::path(opt.out) / "kernel_table.csv");
  out << "k,a_k,error_estimate,a_k_closed_form\n" << std::setprecision(17);
  double worst = 0.0;
  bool has_closed = false;
  for (int k = 0; k <= static_cast<int>(sf.verify.kernel_table_k_max); ++k) {
    const AkValue a = compute_ak_detailed(kernel, k);
    const double closed = ak_closed_form(kernel, k);
    if (!std::isnan(closed)) {
      has_closed = true;
      worst = std::max(worst, std::abs(a.value - closed));
    }
    out << k << ',' << a.value << ',' << a.error_estimate << ',' << closed << '\n';
  }
  if (has_closed) rep.add("closed_form_max_error", worst, 1e-10 * opt.tolerance_scale, worst <= 1e-10 * opt.tolerance_scale);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deterministic solver and certificate checker for the homogeneous Boltzmann equation"};
  app.require_subcommand(1);
  Options opt;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--scenario", opt.scenario, "scenario JSON file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", opt.out, "output directory");
    sub->add_option("--workers", opt.workers, "worker thread cap (falls back to BOLTZ_WORKERS)")->check(CLI::NonNegativeNumber);
    sub->add_option("--seed", opt.seed, "seed for randomized checks");
    sub->add_option("--tolerance-scale", opt.tolerance_scale, "multiplier applied to check tolerances")->check(CLI::PositiveNumber);
  };
  using Handler = int (*)(const Options&, const ScenarioFile&, json&, Report&);
  const std::vector<std::pair<std::string, Handler>> commands = {
      {"run", cmd_run},
      {"barrier", cmd_barrier},
      {"moments-verify", cmd_moments},
      {"collision-check", cmd_collision},
      {"kernel-table", cmd_kernel_table}};
  std::vector<CLI::App*> subs;
  for (const auto& [name, fn] : commands) {
    auto* sub = app.add_subcommand(name);
    add_common(sub);
    if (name == "moments-verify") {
      sub->add_option("--series", opt.series, "diagnostics CSV to verify instead of running the solver")->check(CLI::ExistingFile);
    }
    subs.push_back(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  if (opt.workers == 0) {
    if (const char* env = std::getenv("BOLTZ_WORKERS")) opt.workers = std::atoi(env);
  }
  if (opt.workers > 0) set_worker_count(opt.workers);

  std::size_t which = 0;
  while (which < subs.size() && !subs[which]->parsed()) ++which;
  const std::string& name = commands[which].first;

  const auto t0 = std::chrono::steady_clock::now();
  try {
    const ScenarioFile sf = load_scenario(opt.scenario);
    fs::create_directories(opt.out);
    json manifest = manifest_base(name, opt, sf);
    Report rep;
    commands[which].second(opt, sf, manifest, rep);
    manifest["checks"] = rep.checks;
    manifest["pass"] = rep.pass;
    manifest["timing"] = {{"wall_seconds", std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()}};
    write_json(manifest, fs::path(opt.out) / "manifest.json");
    for (auto it = rep.checks.begin(); it != rep.checks.end(); ++it) {
      std::cout << (it.value()["pass"].get<bool>() ? "PASS " : "FAIL ") << it.key() << " value=" << it.value()["value"]
                << " tolerance=" << it.value()["tolerance"] << '\n';
    }
    return rep.pass ? 0 : 1;
  } catch (const NumericAbort& e) {
    std::cerr << "numeric abort: " << e.what() << " (last good t = " << e.last_good().t << ")\n";
    try {
      fs::create_directories(opt.out);
      write_field_binary(e.last_good().f, (fs::path(opt.out) / "field.bin").string());
    } catch (const std::exception&) {
    }
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}

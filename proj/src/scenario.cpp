#include "boltz/scenario.hpp"

#include <filesystem>
#include <fstream>
#include <set>

namespace boltz {

using nlohmann::json;

namespace {

void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ScenarioError(where + " must be an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!ok.count(it.key())) throw ScenarioError("unknown key '" + where + "." + it.key() + "'");
  }
}

template <class T>
T get(const json& obj, const std::string& where, const char* key, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ScenarioError("key '" + where + "." + key + "' has the wrong type");
  }
}

double positive(double x, const std::string& name) {
  if (!(x > 0.0)) throw ScenarioError(name + " must be positive");
  return x;
}

MaxwellianComponent parse_component(const json& c, const std::string& where) {
  check_keys(c, where, {"a", "b", "c", "weight"});
  MaxwellianComponent m;
  m.params.a = positive(get(c, where, "a", 1.0), where + ".a");
  const auto b = get(c, where, "b", std::vector<double>{});
  if (b.size() > 3) throw ScenarioError(where + ".b has more than 3 components");
  for (std::size_t i = 0; i < b.size(); ++i) m.params.b[i] = b[i];
  m.params.c = get(c, where, "c", 0.0);
  m.weight = positive(get(c, where, "weight", 1.0), where + ".weight");
  return m;
}

std::string resolve(const std::string& base, const std::string& p) {
  std::filesystem::path path(p);
  if (path.is_relative()) path = std::filesystem::path(base) / path;
  if (!std::filesystem::exists(path)) throw ScenarioError("referenced file '" + path.string() + "' does not exist");
  return path.string();
}

}  // namespace

ScenarioFile parse_scenario(const json& doc, const std::string& base_dir) {
  check_keys(doc, "scenario", {"kernel", "grid", "initial", "time", "barrier", "verify"});
  for (const char* req : {"kernel", "grid", "initial"}) {
    if (!doc.contains(req)) throw ScenarioError(std::string("missing section '") + req + "'");
  }
  ScenarioFile out;
  Scenario& sc = out.scenario;

  const json& k = doc.at("kernel");
  check_keys(k, "kernel", {"d", "beta", "profile", "alpha", "amplitude", "table_file"});
  sc.d = get(k, "kernel", "d", 3);
  sc.kernel.d = sc.d;
  sc.kernel.beta = get(k, "kernel", "beta", 1.0);
  try {
    sc.kernel.profile = profile_from_string(get(k, "kernel", "profile", std::string("isotropic")));
  } catch (const std::invalid_argument& e) {
    throw ScenarioError(e.what());
  }
  sc.kernel.alpha = get(k, "kernel", "alpha", 0.0);
  if (k.contains("amplitude")) sc.kernel.amplitude = get(k, "kernel", "amplitude", 0.0);
  if (sc.kernel.profile == ProfileKind::table) {
    if (!k.contains("table_file")) throw ScenarioError("kernel.table_file is required for the table profile");
    try {
      load_profile_table(resolve(base_dir, get(k, "kernel", "table_file", std::string())), sc.kernel);
    } catch (const ScenarioError&) {
      throw;
    } catch (const std::invalid_argument& e) {
      throw ScenarioError(e.what());
    }
  }
  try {
    (void)normalize_kernel(sc.kernel);
  } catch (const std::invalid_argument& e) {
    throw ScenarioError(e.what());
  }

  const json& g = doc.at("grid");
  check_keys(g, "grid", {"n", "vmax", "nz", "nphi", "interpolation"});
  sc.n = get(g, "grid", "n", 11);
  sc.vmax = positive(get(g, "grid", "vmax", 6.0), "grid.vmax");
  sc.nz = get(g, "grid", "nz", 4);
  sc.nphi = get(g, "grid", "nphi", 8);
  if (sc.n < 3) throw ScenarioError("grid.n must be at least 3");
  if (sc.nz < 1 || sc.nphi < 1) throw ScenarioError("grid.nz and grid.nphi must be at least 1");
  const std::string interp = get(g, "grid", "interpolation", std::string("maxwellian_ratio"));
  if (interp == "maxwellian_ratio") sc.interpolation = Interpolation::maxwellian_ratio;
  else if (interp == "multilinear") sc.interpolation = Interpolation::multilinear;
  else throw ScenarioError("grid.interpolation must be maxwellian_ratio or multilinear");

  const json& in = doc.at("initial");
  check_keys(in, "initial", {"kind", "a", "b", "c", "weight", "components", "path"});
  try {
    sc.initial.kind = initial_from_string(get(in, "initial", "kind", std::string("maxwellian")));
  } catch (const std::invalid_argument& e) {
    throw ScenarioError(e.what());
  }
  if (sc.initial.kind == InitialKind::file) {
    sc.initial.path = resolve(base_dir, get(in, "initial", "path", std::string()));
  } else if (sc.initial.kind == InitialKind::mixture) {
    if (!in.contains("components") || !in.at("components").is_array() || in.at("components").empty()) {
      throw ScenarioError("initial.components must be a nonempty array for a mixture");
    }
    int idx = 0;
    for (const auto& c : in.at("components")) {
      sc.initial.components.push_back(parse_component(c, "initial.components[" + std::to_string(idx++) + "]"));
    }
  } else {
    json single = json::object();
    for (const char* key : {"a", "b", "c", "weight"}) {
      if (in.contains(key)) single[key] = in.at(key);
    }
    if (sc.initial.kind == InitialKind::maxwellian && single.contains("weight")) {
      throw ScenarioError("initial.weight applies to scaled_maxwellian only");
    }
    sc.initial.components.push_back(parse_component(single, "initial"));
  }

  if (doc.contains("time")) {
    const json& t = doc.at("time");
    check_keys(t, "time", {"dt", "steps", "project", "cadence"});
    sc.dt = get(t, "time", "dt", 0.0);
    if (sc.dt < 0.0) throw ScenarioError("time.dt must be nonnegative (0 selects the default)");
    sc.steps = get(t, "time", "steps", sc.steps);
    if (sc.steps < 0) throw ScenarioError("time.steps must be nonnegative");
    sc.project = get(t, "time", "project", true);
    sc.cadence = get(t, "time", "cadence", 1);
    if (sc.cadence < 1) throw ScenarioError("time.cadence must be at least 1");
  }

  if (doc.contains("barrier")) {
    const json& b = doc.at("barrier");
    check_keys(b, "barrier", {"a0", "c0", "a1", "c1", "C1", "rho0", "C0", "a"});
    BarrierInputs bi;
    bi.a0 = get(b, "barrier", "a0", bi.a0);
    bi.c0 = get(b, "barrier", "c0", bi.c0);
    bi.a1 = get(b, "barrier", "a1", bi.a1);
    bi.c1 = get(b, "barrier", "c1", bi.c1);
    bi.C1 = get(b, "barrier", "C1", bi.C1);
    bi.rho0 = get(b, "barrier", "rho0", bi.rho0);
    bi.C0 = get(b, "barrier", "C0", bi.C0);
    bi.a = get(b, "barrier", "a", bi.a);
    try {
      bi.validate();
    } catch (const std::invalid_argument& e) {
      throw ScenarioError(e.what());
    }
    sc.barrier = bi;
  }

  VerifyOptions& v = out.verify;
  if (doc.contains("verify")) {
    const json& vj = doc.at("verify");
    check_keys(vj, "verify", {"moment_k_max", "k_limit", "samples", "holder_k", "holder_p", "linear_steps",
                              "linear_dt_nu", "tail_delta", "tail_eta", "plane_nr", "plane_nphi", "kernel_table_k_max"});
    sc.moment_k_max = get(vj, "verify", "moment_k_max", sc.moment_k_max);
    v.k_limit = get(vj, "verify", "k_limit", v.k_limit);
    v.samples = get(vj, "verify", "samples", v.samples);
    v.holder_k = get(vj, "verify", "holder_k", v.holder_k);
    v.holder_p = get(vj, "verify", "holder_p", v.holder_p);
    v.linear_steps = get(vj, "verify", "linear_steps", v.linear_steps);
    v.linear_dt_nu = get(vj, "verify", "linear_dt_nu", v.linear_dt_nu);
    v.tail_delta = get(vj, "verify", "tail_delta", v.tail_delta);
    v.tail_eta = get(vj, "verify", "tail_eta", v.tail_eta);
    v.plane_nr = get(vj, "verify", "plane_nr", v.plane_nr);
    v.plane_nphi = get(vj, "verify", "plane_nphi", v.plane_nphi);
    v.kernel_table_k_max = get(vj, "verify", "kernel_table_k_max", v.kernel_table_k_max);
    if (v.k_limit > sc.moment_k_max) throw ScenarioError("verify.k_limit must not exceed verify.moment_k_max");
    if (v.samples < 1) throw ScenarioError("verify.samples must be at least 1");
    if (v.linear_steps < 0) throw ScenarioError("verify.linear_steps must be nonnegative");
    if (!(v.linear_dt_nu > 0.0)) throw ScenarioError("verify.linear_dt_nu must be positive");
  }

  json& e = out.echo;
  e["kernel"] = {{"d", sc.d}, {"beta", sc.kernel.beta}, {"profile", to_string(sc.kernel.profile)}, {"alpha", sc.kernel.alpha}};
  if (sc.kernel.amplitude) e["kernel"]["amplitude"] = *sc.kernel.amplitude;
  e["grid"] = {{"n", sc.n}, {"vmax", sc.vmax}, {"nz", sc.nz}, {"nphi", sc.nphi}, {"interpolation", interp}};
  e["initial"] = {{"kind", to_string(sc.initial.kind)}};
  if (!sc.initial.path.empty()) e["initial"]["path"] = sc.initial.path;
  for (const auto& c : sc.initial.components) {
    e["initial"]["components"].push_back(
        {{"a", c.params.a}, {"b", {c.params.b[0], c.params.b[1], c.params.b[2]}}, {"c", c.params.c}, {"weight", c.weight}});
  }
  e["time"] = {{"dt", sc.dt}, {"steps", sc.steps}, {"project", sc.project}, {"cadence", sc.cadence}};
  if (sc.barrier) e["barrier"] = to_json(*sc.barrier);
  e["verify"] = {{"moment_k_max", sc.moment_k_max}, {"k_limit", v.k_limit}, {"samples", v.samples},
                 {"holder_k", v.holder_k}, {"holder_p", v.holder_p}, {"linear_steps", v.linear_steps},
                 {"linear_dt_nu", v.linear_dt_nu}, {"tail_delta", v.tail_delta}, {"tail_eta", v.tail_eta},
                 {"plane_nr", v.plane_nr}, {"plane_nphi", v.plane_nphi}, {"kernel_table_k_max", v.kernel_table_k_max}};
  return out;
}

ScenarioFile load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot read scenario '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ScenarioError(std::string("scenario is not valid JSON: ") + e.what());
  }
  return parse_scenario(doc, std::filesystem::path(path).parent_path().string());
}

json to_json(const BarrierInputs& b) {
  return {{"a0", b.a0}, {"c0", b.c0}, {"a1", b.a1}, {"c1", b.c1}, {"C1", b.C1}, {"rho0", b.rho0}, {"C0", b.C0}, {"a", b.a}};
}

json to_json(const BarrierCertificate& c) {
  json j = to_json(c.inputs);
  j["beta"] = c.beta;
  j["eps"] = c.eps;
  j["L"] = c.L;
  j["lambda"] = c.lambda;
  j["kernel_constant"] = {{"c_profile", c.kernel_constants.c_profile},
                          {"case_a", c.kernel_constants.case_a},
                          {"case_b", c.kernel_constants.case_b},
                          {"total", c.kernel_constants.total}};
  j["C"] = c.C;
  j["R"] = c.R;
  j["aR2_plus_log_C0"] = c.log_c0_term;
  j["c"] = c.c;
  return j;
}

}  // namespace boltz

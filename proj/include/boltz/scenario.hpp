#pragma once

#include <stdexcept>
#include <string>

#include <json.hpp>

#include "boltz/solver.hpp"

namespace boltz {

class ScenarioError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct VerifyOptions {
  double k_limit = 6.0;
  int samples = 20;
  double holder_k = 2.0;
  double holder_p = 0.0;
  int linear_steps = 50;
  double linear_dt_nu = 0.5;
  double tail_delta = 0.02;
  double tail_eta = 1e-10;
  int plane_nr = 6;
  int plane_nphi = 12;
  double kernel_table_k_max = 50.0;
};

struct ScenarioFile {
  Scenario scenario;
  VerifyOptions verify;
  nlohmann::json echo;  // effective values after defaults
};

ScenarioFile parse_scenario(const nlohmann::json& doc, const std::string& base_dir = ".");
ScenarioFile load_scenario(const std::string& path);

nlohmann::json to_json(const BarrierInputs& b);
nlohmann::json to_json(const BarrierCertificate& c);

}  // namespace boltz

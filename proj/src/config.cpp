#include "pdeop/config.hpp"

#include <fstream>
#include <sstream>

namespace pdeop {
namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<int> parse_int_list(const std::string& v, const std::string& key) {
  std::vector<int> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    try {
      out.push_back(std::stoi(item));
    } catch (...) {
      throw ConfigError("config: bad integer list for key '" + key + "': " + v);
    }
  }
  return out;
}

}  // namespace

RunConfig parse_run_config_text(const std::string& text, const std::string& origin) {
  RunConfig cfg;
  cfg.train.stencil = StencilConfig{};  // re-derived below if T or L change
  bool stencil_set_x = false, stencil_set_tau = false;
  double power_exponent = 2.0;
  std::string diffusion_name = "quadratic";

  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(lineno) +
                        ": expected key=value, got '" + line + "'");
    std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    auto num = [&]() -> double {
      try {
        size_t pos;
        double d = std::stod(val, &pos);
        if (pos != val.size()) throw std::invalid_argument(val);
        return d;
      } catch (...) {
        throw ConfigError(origin + ":" + std::to_string(lineno) +
                          ": bad numeric value for '" + key + "': " + val);
      }
    };
    auto integer = [&]() { return static_cast<long>(num()); };

    if (key == "T") cfg.domain.time_horizon = num();
    else if (key == "L") cfg.domain.half_width = num();
    else if (key == "variance") cfg.gp.variance = num();
    else if (key == "length_scale") cfg.gp.length_scale = num();
    else if (key == "jitter") cfg.gp.jitter = num();
    else if (key == "N") cfg.train.function_count = static_cast<int>(integer());
    else if (key == "m") cfg.train.sensor_count = static_cast<int>(integer());
    else if (key == "P") cfg.train.boundary_points = static_cast<int>(integer());
    else if (key == "Q") cfg.train.interior_points = static_cast<int>(integer());
    else if (key == "iterations") cfg.train.iterations = integer();
    else if (key == "learning_rate") cfg.train.learning_rate = num();
    else if (key == "seed") cfg.train.seed = static_cast<uint64_t>(integer());
    else if (key == "activation") cfg.train.activation = activation_from_string(val);
    else if (key == "q") cfg.train.embedding_dim = static_cast<int>(integer());
    else if (key == "branch_hidden") cfg.train.branch_hidden = parse_int_list(val, key);
    else if (key == "trunk_hidden") cfg.train.trunk_hidden = parse_int_list(val, key);
    else if (key == "functions_per_batch")
      cfg.train.functions_per_batch = static_cast<int>(integer());
    else if (key == "log_every") cfg.train.log_every = static_cast<int>(integer());
    else if (key == "h_x") { cfg.train.stencil.h_x = num(); stencil_set_x = true; }
    else if (key == "h_tau") { cfg.train.stencil.h_tau = num(); stencil_set_tau = true; }
    else if (key == "nx") cfg.fdm.nx = static_cast<int>(integer());
    else if (key == "nt") cfg.fdm.nt = static_cast<int>(integer());
    else if (key == "newton_tol") cfg.fdm.newton_tol = num();
    else if (key == "newton_max_iters") cfg.fdm.newton_max_iters = static_cast<int>(integer());
    else if (key == "diffusion") diffusion_name = val;
    else if (key == "power_exponent") power_exponent = num();
    else if (key == "n_test") cfg.n_test = static_cast<int>(integer());
    else if (key == "eval_grid") cfg.eval_grid = static_cast<int>(integer());
    else
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": unknown key '" +
                        key + "'");
  }

  if (!stencil_set_x) cfg.train.stencil.h_x = 1e-2 * cfg.domain.half_width;
  if (!stencil_set_tau) cfg.train.stencil.h_tau = 1e-2 * cfg.domain.time_horizon;
  cfg.diffusion = DiffusionFunction::from_string(diffusion_name, power_exponent);
  return cfg;
}

RunConfig parse_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config_text(ss.str(), path);
}

}  // namespace pdeop

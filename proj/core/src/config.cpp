#include "mmflow/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace mmflow {

namespace {

std::string trim(const std::string& s) {
  const auto from = s.find_first_not_of(" \t\r");
  if (from == std::string::npos) return "";
  const auto to = s.find_last_not_of(" \t\r");
  return s.substr(from, to - from + 1);
}

std::vector<double> parse_list(const std::string& value) {
  std::vector<double> out;
  std::stringstream ss(value);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(std::stod(trim(tok)));
  return out;
}

bool parse_bool(const std::string& value) {
  if (value == "1" || value == "true" || value == "on") return true;
  if (value == "0" || value == "false" || value == "off") return false;
  throw std::runtime_error("config: expected boolean, got '" + value + "'");
}

}  // namespace

RunConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  return parse_config_stream(in, path);
}

RunConfig parse_config_stream(std::istream& in, const std::string& origin) {
  std::map<std::string, std::string> kv;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error(origin + ":" + std::to_string(line_no) +
                               ": expected 'section.key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw std::runtime_error(origin + ":" + std::to_string(line_no) + ": empty key or value");
    }
    if (!kv.emplace(key, value).second) {
      throw std::runtime_error(origin + ": duplicate key '" + key + "'");
    }
  }

  RunConfig cfg;
  auto take = [&](const std::string& key) -> std::string {
    auto it = kv.find(key);
    if (it == kv.end()) return "";
    std::string v = it->second;
    kv.erase(it);
    return v;
  };
  auto take_double = [&](const std::string& key, double* dst) {
    const std::string v = take(key);
    if (!v.empty()) *dst = std::stod(v);
    return !v.empty();
  };
  auto take_int = [&](const std::string& key, int* dst) {
    const std::string v = take(key);
    if (!v.empty()) *dst = std::stoi(v);
    return !v.empty();
  };
  auto take_bool = [&](const std::string& key, bool* dst) {
    const std::string v = take(key);
    if (!v.empty()) *dst = parse_bool(v);
    return !v.empty();
  };

  take_int("grid.dim", &cfg.grid.dim);
  if (!take_int("grid.nx", &cfg.grid.nx)) {
    throw std::runtime_error(origin + ": missing required key grid.nx");
  }
  take_int("grid.ny", &cfg.grid.ny);
  take_double("grid.x0", &cfg.grid.x0);
  take_double("grid.x1", &cfg.grid.x1);
  take_double("grid.y0", &cfg.grid.y0);
  take_double("grid.y1", &cfg.grid.y1);

  if (!take_int("phases.count", &cfg.phase_count)) {
    throw std::runtime_error(origin + ": missing required key phases.count");
  }
  if (cfg.phase_count < 1) throw std::runtime_error(origin + ": phases.count must be >= 1");

  std::string v;
  if (!(v = take("medium.preset")).empty()) cfg.medium_preset = v;
  if (!(v = take("medium.csv")).empty()) cfg.medium_csv = v;
  take_bool("medium.anisotropic", &cfg.medium_anisotropic);
  take_double("medium.omega", &cfg.omega);
  take_double("medium.kappa", &cfg.kappa);
  if (!(v = take("medium.mu")).empty()) cfg.mu = parse_list(v);
  if (!(v = take("medium.rho")).empty()) cfg.rho = parse_list(v);
  take_double("medium.gravity", &cfg.gravity);

  if (!(v = take("capillary.preset")).empty()) cfg.capillary_preset = v;
  take_double("capillary.a", &cfg.capillary_a);
  if (!(v = take("capillary.csv")).empty()) cfg.capillary_csv = v;

  if (!(v = take("init.preset")).empty()) cfg.init_preset = v;
  if (!(v = take("init.fractions")).empty()) cfg.init_fractions = parse_list(v);
  take_int("init.heavy_phase", &cfg.init_heavy_phase);
  take_double("init.top_fraction", &cfg.init_top_fraction);
  if (!(v = take("init.csv")).empty()) cfg.init_csv = v;

  if (!take_double("jko.tau", &cfg.tau)) {
    throw std::runtime_error(origin + ": missing required key jko.tau");
  }
  if (!take_double("jko.horizon", &cfg.horizon)) {
    throw std::runtime_error(origin + ": missing required key jko.horizon");
  }
  if (!(v = take("jko.epsilon")).empty()) {
    cfg.epsilon = v == "auto" ? -1.0 : std::stod(v);
  }
  take_double("jko.epsilon_rel", &cfg.epsilon_rel);
  take_bool("jko.exact_oracle", &cfg.exact_oracle);
  take_double("jko.fw_tol", &cfg.fw_tol);
  take_int("jko.max_fw_iterations", &cfg.max_fw_iterations);
  take_double("sinkhorn.tol", &cfg.sinkhorn_tol);
  take_int("sinkhorn.max_iterations", &cfg.sinkhorn_max_iterations);

  if (!(v = take("output.dir")).empty()) cfg.output_dir = v;
  int seed = 0;
  if (take_int("run.seed", &seed)) cfg.seed = static_cast<unsigned>(seed);
  take_bool("diagnostics.enabled", &cfg.diagnostics);

  if (!kv.empty()) {
    std::ostringstream msg;
    msg << origin << ": unknown key(s):";
    for (const auto& [key, _] : kv) msg << " " << key;
    throw std::runtime_error(msg.str());
  }

  if (!(cfg.tau > 0.0)) throw std::runtime_error(origin + ": jko.tau must be positive");
  if (cfg.horizon < 0.0) throw std::runtime_error(origin + ": jko.horizon must be >= 0");
  if (cfg.epsilon == 0.0) throw std::runtime_error(origin + ": jko.epsilon must be positive");
  if (cfg.mu.empty()) cfg.mu.assign(cfg.phase_count, 1.0);
  if (static_cast<int>(cfg.mu.size()) != cfg.phase_count) {
    throw std::runtime_error(origin + ": medium.mu needs one value per phase");
  }
  if (!cfg.rho.empty() && static_cast<int>(cfg.rho.size()) != cfg.phase_count) {
    throw std::runtime_error(origin + ": medium.rho needs one value per phase");
  }
  return cfg;
}

}  // namespace mmflow

#pragma once

#include <istream>
#include <string>
#include <vector>

#include "mmflow/grid.hpp"

namespace mmflow {

/// Parsed, validated run configuration. The input format is a flat text file
/// of `section.key = value` lines; `#` starts a comment. Unknown keys are
/// rejected.
struct RunConfig {
  GridConfig grid;

  std::string medium_preset = "uniform";  // uniform | gravity_column | layered | csv
  std::string medium_csv;
  bool medium_anisotropic = false;
  double omega = 0.3;
  double kappa = 1.0;
  std::vector<double> mu;   // one per phase; default 1.0 each
  std::vector<double> rho;  // densities for the gravity presets
  double gravity = 9.81;

  int phase_count = 1;

  std::string capillary_preset = "quadratic_uniform";  // or csv
  double capillary_a = 1.0;
  std::string capillary_csv;

  std::string init_preset = "uniform_mix";  // uniform_mix | heavy_top | csv
  std::vector<double> init_fractions;       // uniform_mix
  int init_heavy_phase = 1;                 // heavy_top
  double init_top_fraction = 0.8;           // heavy_top
  std::string init_csv;

  double tau = 0.0;      // required
  double horizon = 0.0;  // required
  double epsilon = -1.0;  // < 0: auto (epsilon_rel * median cost)
  double epsilon_rel = 1e-2;
  bool exact_oracle = false;
  double fw_tol = 1e-6;
  int max_fw_iterations = 500;
  double sinkhorn_tol = 1e-8;
  int sinkhorn_max_iterations = 50000;

  std::string output_dir = "out";
  unsigned seed = 0;
  bool diagnostics = true;
};

RunConfig parse_config(const std::string& path);
RunConfig parse_config_stream(std::istream& in, const std::string& origin = "<stream>");

}  // namespace mmflow

#include <CLI11.hpp>
#include <iostream>

#include "mmflow/runner.hpp"
#include "mmflow/transport.hpp"

namespace {

int cmd_run(const std::string& config_path, double tau, int steps, double epsilon,
            const std::string& out_dir, bool exact_oracle, bool no_diagnostics) {
  mmflow::RunConfig config = mmflow::parse_config(config_path);
  if (tau > 0.0) {
    if (steps > 0) config.horizon = steps * tau;
    config.tau = tau;
  } else if (steps > 0) {
    config.horizon = steps * config.tau;
  }
  if (epsilon > 0.0) config.epsilon = epsilon;
  if (!out_dir.empty()) config.output_dir = out_dir;
  if (exact_oracle) config.exact_oracle = true;
  if (no_diagnostics) config.diagnostics = false;
  return mmflow::run_config(config);
}

int cmd_bathtub_solve(const std::string& instance_path, const std::string& out_path) {
  const mmflow::BathtubInstance inst = mmflow::io::read_bathtub_csv(instance_path);
  const mmflow::BathtubSolution sol = mmflow::solve_bathtub(inst);
  mmflow::io::write_bathtub_solution_csv(out_path, sol);
  std::cout << "value " << sol.primal_value << " (dual " << sol.dual_value << ", "
            << (sol.converged ? "converged" : "NOT CONVERGED") << ")\n";
  if (!sol.converged) {
    std::cerr << sol.diagnostic << "\n";
    return 1;
  }
  return 0;
}

int cmd_w2_compute(const std::string& cost_path, const std::string& source_path,
                   const std::string& target_path, double epsilon,
                   const std::string& plan_path) {
  const Eigen::MatrixXd cost = mmflow::io::read_matrix_csv(cost_path);
  const mmflow::MassVector a = mmflow::MassVector::of(mmflow::io::read_vector_csv(source_path));
  const mmflow::MassVector b = mmflow::MassVector::of(mmflow::io::read_vector_csv(target_path));
  mmflow::TransportResult r;
  if (epsilon > 0.0) {
    r = mmflow::sinkhorn_w2(cost, a, b, epsilon);
  } else {
    r = mmflow::exact_w2(cost, a, b);
  }
  std::cout << "w2_squared " << r.value << "\n";
  if (!plan_path.empty()) mmflow::io::write_plan_csv(plan_path, r.plan);
  return r.converged ? 0 : 1;
}

int cmd_convexity_check(const std::string& config_path, double layer) {
  const mmflow::RunConfig config = mmflow::parse_config(config_path);
  const mmflow::RunSetup setup = mmflow::build_setup(config);
  if (layer <= 0.0) {
    layer = 3.0 * std::max(setup.grid.hx, setup.grid.dim == 2 ? setup.grid.hy : 0.0);
  }
  const auto report =
      mmflow::check_geodesic_convexity_isotropic(setup.grid, setup.medium, layer);
  std::cout << (report.pass ? "PASS" : "FAIL") << "\n" << report.detail << "\n";
  return report.pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Minimizing-movement simulator for multiphase porous-media flow"};
  app.require_subcommand(1);

  // run
  std::string config_path, out_dir;
  double tau = -1.0, epsilon = -1.0;
  int steps = -1;
  bool exact_oracle = false, no_diagnostics = false;
  auto* run = app.add_subcommand("run", "Run a configured simulation");
  run->add_option("--config", config_path, "Path to the run configuration")->required();
  run->add_option("--tau", tau, "Override the time step");
  run->add_option("--steps", steps, "Override the number of steps");
  run->add_option("--epsilon", epsilon, "Override the entropic regularization");
  run->add_option("--out", out_dir, "Override the output directory");
  run->add_flag("--exact-oracle", exact_oracle,
                "Use exact transport solves (grids up to 64 cells)");
  run->add_flag("--no-diagnostics", no_diagnostics, "Skip the diagnostics CSV");

  // bathtub solve
  auto* bathtub = app.add_subcommand("bathtub", "Bathtub allocation problems");
  std::string instance_path, solution_path = "bathtub_solution.csv";
  auto* bathtub_solve = bathtub->add_subcommand("solve", "Solve an instance CSV");
  bathtub_solve->add_option("instance", instance_path, "Instance CSV")->required();
  bathtub_solve->add_option("--out", solution_path, "Solution CSV path");

  // w2 compute
  auto* w2 = app.add_subcommand("w2", "Optimal transport distances");
  std::string cost_path, source_path, target_path, plan_path;
  double w2_epsilon = -1.0;
  auto* w2_compute = w2->add_subcommand("compute", "Squared distance between two marginals");
  w2_compute->add_option("--cost", cost_path, "Squared ground-cost matrix CSV")->required();
  w2_compute->add_option("--source", source_path, "Source mass vector CSV")->required();
  w2_compute->add_option("--target", target_path, "Target mass vector CSV")->required();
  w2_compute->add_option("--epsilon", w2_epsilon, "Entropic regularization (exact if omitted)");
  w2_compute->add_option("--plan", plan_path, "Write the transport plan CSV here");

  // convexity check
  auto* convexity = app.add_subcommand("convexity", "Medium hypothesis screens");
  std::string conv_config;
  double layer = -1.0;
  auto* convexity_check =
      convexity->add_subcommand("check", "Boundary monotonicity of the permeability");
  convexity_check->add_option("--config", conv_config, "Run configuration")->required();
  convexity_check->add_option("--layer", layer, "Boundary layer width");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      return cmd_run(config_path, tau, steps, epsilon, out_dir, exact_oracle, no_diagnostics);
    }
    if (bathtub->parsed() && bathtub_solve->parsed()) {
      return cmd_bathtub_solve(instance_path, solution_path);
    }
    if (w2->parsed() && w2_compute->parsed()) {
      return cmd_w2_compute(cost_path, source_path, target_path, w2_epsilon, plan_path);
    }
    if (convexity->parsed() && convexity_check->parsed()) {
      return cmd_convexity_check(conv_config, layer);
    }
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 2;
  }
  return 0;
}

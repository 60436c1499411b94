#pragma once

#include <memory>
#include <string>
#include <vector>

#include "mmflow/bathtub.hpp"
#include "mmflow/config.hpp"
#include "mmflow/cost.hpp"
#include "mmflow/diagnostics.hpp"
#include "mmflow/energy.hpp"
#include "mmflow/jko.hpp"

namespace mmflow {

/// Everything a run needs, assembled from a validated config.
struct RunSetup {
  Grid grid;
  MediumSpec medium;
  std::shared_ptr<CapillaryLaw> law;
  CostBundle bundle;
  PhaseField s0;
  JKOOptions jko;
};

RunSetup build_setup(const RunConfig& config);

/// Executes the configured simulation, writing per-step state CSVs,
/// diagnostics.csv and summary.csv into config.output_dir. Returns 0 when
/// every summary check passes. Solver aborts flush partial outputs and
/// return nonzero.
int run_config(const RunConfig& config);

namespace io {

void write_state_csv(const std::string& path, const Grid& grid, const PhaseField& s,
                     const Eigen::MatrixXd& p, const Eigen::MatrixXd& pi);

/// Reads back a state CSV written by write_state_csv.
struct StateFile {
  PhaseField s;
  Eigen::MatrixXd p;
  Eigen::MatrixXd pi;
};
StateFile read_state_csv(const std::string& path, const Grid& grid, int phase_count);

void write_diagnostics_csv(const std::string& path, const std::vector<DiagnosticsRow>& rows);
void write_summary_csv(const std::string& path, const std::vector<CheckReport>& checks);

/// Bathtub instance CSV: comment header `# masses=m0,m1,...` then rows
/// cell,omega,F_0..F_N.
BathtubInstance read_bathtub_csv(const std::string& path);
void write_bathtub_solution_csv(const std::string& path, const BathtubSolution& sol);

/// Dense matrix / vector CSVs for the w2 subcommand.
Eigen::MatrixXd read_matrix_csv(const std::string& path);
Eigen::VectorXd read_vector_csv(const std::string& path);

void write_plan_csv(const std::string& path, const Eigen::MatrixXd& plan);

}  // namespace io

}  // namespace mmflow

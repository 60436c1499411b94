#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "mmflow/auxflow.hpp"
#include "mmflow/bathtub.hpp"
#include "mmflow/cost.hpp"
#include "mmflow/energy.hpp"
#include "mmflow/field.hpp"
#include "mmflow/transport.hpp"

namespace mmflow {

struct JKOOptions {
  TransportMode mode = TransportMode::entropic;
  double epsilon = -1.0;      // absolute; < 0 selects epsilon_rel * median(Csq_i)
  double epsilon_rel = 1e-2;
  SinkhornOptions sinkhorn;

  double fw_tol_rel = 1e-6;   // stop when gap <= fw_tol_rel * (1 + |objective|)
  int max_fw_iterations = 500;
  double armijo_decrease = 1e-4;
  int max_backtracks = 30;

  double positivity_floor_rel = 1e-12;
  double positivity_delta = 1e-4;
  double positivity_delta_cap = 1.0;

  double constraint_tol = 1e-9;
  double bathtub_tol = -1.0;  // < 0: solver default
};

/// Everything produced by one minimizing-movement step.
///
/// Potentials `phi` are stored in the half-squared-cost convention (the
/// duals of the solvers divided by two), which is the scaling entering the
/// F-fields and the pressure reconstruction.
struct JKOStepRecord {
  PhaseField s_prev;  // the anchor actually used (after any regularization)
  PhaseField s_new;
  double tau = 0.0;

  Eigen::MatrixXd phi;     // (N+1) x cells, half-cost convention
  Eigen::MatrixXd F;       // (N+1) x cells
  Eigen::VectorXd alpha;   // bathtub multipliers, min alpha = 0
  Eigen::VectorXd lambda;  // per-cell pointwise minimum of F + alpha
  Eigen::MatrixXd h;       // hydraulic heads, h_0 mean-zero
  Eigen::MatrixXd p;       // phase pressures p_i = h_i - Psi_i

  double fw_gap = 0.0;
  int fw_iterations = 0;
  bool converged = true;
  std::vector<double> w2;  // per-phase squared distances (plan cost)
  std::vector<double> epsilon_used;
  double energy_before = 0.0;
  double energy_after = 0.0;
  double objective = 0.0;  // sum w2/(2 tau) + E at the accepted state
  double positivity_delta_used = 0.0;
};

/// F_i = phi_i / tau + pi_i + Psi_i with pi_0 = 0; phi_i is the backward
/// potential of the transport from s_current to the step anchor, i.e. half
/// of the squared-cost duals carried by `transports`.
Eigen::MatrixXd assemble_F(const PhaseField& s_current, double tau,
                           const std::vector<TransportResult>& transports,
                           const CapillaryLaw& law, const MediumSpec& medium);

struct PressureFields {
  Eigen::MatrixXd h;
  Eigen::MatrixXd p;
};

/// h_i = -phi_i/tau + F_i - lambda with h_0 shifted to zero mean; the heads
/// for i >= 1 are rebuilt from h_0 through the capillary relations so that
/// p_i - p_0 = pi_i holds to machine precision. p_i = h_i - Psi_i.
PressureFields reconstruct_pressures(const Eigen::MatrixXd& F, const Eigen::MatrixXd& phi,
                                     const Eigen::VectorXd& alpha, const Eigen::VectorXd& lambda,
                                     const MediumSpec& medium, const Grid& grid, double tau);

/// One step of the minimizing-movement scheme: conditional gradient on
/// W^2(s, s_prev)/(2 tau) + E(s) over the saturation/mass polytope with the
/// bathtub problem as the linear oracle and Armijo backtracking on the true
/// objective.
JKOStepRecord jko_step(const PhaseField& s_prev, double tau, const Grid& grid,
                       const MediumSpec& medium, const CapillaryLaw& law,
                       const CostBundle& bundle, const JKOOptions& opts = {});

using StepCallback = std::function<void(int step, const JKOStepRecord&)>;

/// ceil(T / tau) steps from s0; deterministic given inputs. The callback, when
/// provided, runs after each step (the caller persists states there). Step
/// errors propagate after the callback has seen the completed steps.
std::vector<JKOStepRecord> run_simulation(const PhaseField& s0, double tau, double horizon,
                                          const Grid& grid, const MediumSpec& medium,
                                          const CapillaryLaw& law, const CostBundle& bundle,
                                          const JKOOptions& opts = {},
                                          const StepCallback& callback = {});

}  // namespace mmflow

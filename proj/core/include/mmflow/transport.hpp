#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "mmflow/cost.hpp"
#include "mmflow/field.hpp"

namespace mmflow {

enum class TransportMode { exact, entropic };

struct SinkhornOptions {
  double tol_rel = 1e-8;  // marginal L1 error below tol_rel * total mass
  int max_iterations = 50000;
  bool want_plan = true;
  // Warm-start potentials (full-size vectors); ignored when absent.
  std::optional<Eigen::VectorXd> warm_phi;
  std::optional<Eigen::VectorXd> warm_psi;
};

/// Outcome of one optimal-transport solve for a given ground cost matrix.
///
/// Potentials are duals of the problem with the cost as supplied:
/// phi(x) + psi(y) <= cost(x, y), with equality on the support of the plan,
/// normalized so that phi(cell 0) = 0. When the cost is a squared distance,
/// value is the squared Wasserstein distance and dual_value = phi.a + psi.b
/// matches it (exactly for the exact solver, up to the entropic bias for
/// Sinkhorn).
struct TransportResult {
  double value = 0.0;
  double dual_value = 0.0;
  Eigen::MatrixXd plan;
  Eigen::VectorXd phi, psi;
  TransportMode mode = TransportMode::exact;
  double epsilon = 0.0;
  int iterations = 0;
  double marginal_error = 0.0;
  bool converged = true;
};

/// Exact solver: transportation simplex on the dense bipartite instance.
/// Intended for desk-scale marginals (up to a few hundred cells).
TransportResult exact_w2(const Eigen::MatrixXd& cost, const MassVector& a, const MassVector& b);

/// Log-domain stabilized Sinkhorn iterations for the entropically regularized
/// problem; zero-mass cells are pruned first and their potentials backfilled
/// by the c-transform.
TransportResult sinkhorn_w2(const Eigen::MatrixXd& cost, const MassVector& a, const MassVector& b,
                            double epsilon, const SinkhornOptions& opts = {});

/// Median off-diagonal cost entry; the reference scale for epsilon defaults.
double median_offdiagonal(const Eigen::MatrixXd& cost);

struct GlobalW2Result {
  double total = 0.0;                  // sum of per-phase squared distances
  std::vector<double> per_phase;       // W_i^2
  std::vector<TransportResult> solves;
};

struct GlobalW2Options {
  TransportMode mode = TransportMode::exact;
  double epsilon_rel = 1e-2;  // entropic: eps_i = epsilon_rel * median(Csq_i)
  SinkhornOptions sinkhorn;
  bool keep_solves = false;
};

GlobalW2Result global_w2(const CostBundle& bundle, const PhaseField& s, const PhaseField& s_hat,
                         const GlobalW2Options& opts = {});

}  // namespace mmflow

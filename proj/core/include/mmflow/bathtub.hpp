#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "mmflow/lp.hpp"

namespace mmflow {

/// Linear allocation problem: minimize sum_i sum_x F_i(x) s_i(x) over
/// s_i(x) >= 0 with per-cell capacities sum_i s_i(x) = omega(x) and
/// per-phase totals sum_x s_i(x) = m_i.
struct BathtubInstance {
  Eigen::MatrixXd F;      // (N+1) x cells
  Eigen::VectorXd omega;  // per-cell capacity, mass units
  Eigen::VectorXd m;      // per-phase totals, sum m = sum omega

  int phase_count() const { return static_cast<int>(F.rows()); }
  int cell_count() const { return static_cast<int>(F.cols()); }
  void validate() const;
};

struct BathtubSolution {
  Eigen::MatrixXd s;        // optimal allocation
  Eigen::VectorXd alpha;    // multipliers, normalized min alpha = 0
  Eigen::VectorXd lambda;   // lambda(x) = min_j (F_j(x) + alpha_j)
  double primal_value = 0.0;
  double dual_value = 0.0;
  std::vector<int> tie_cells;
  int iterations = 0;
  bool converged = false;
  std::string diagnostic;
};

/// Concave dual objective J(alpha) = sum_x min_j(F_j + alpha_j) omega(x)
/// - alpha.m. Invariant under diagonal shifts of alpha.
double dual_value(const BathtubInstance& instance, const Eigen::VectorXd& alpha);

/// Maximizes J by supergradient ascent (Polyak-style steps on
/// sum_x theta(x) omega(x) - m) interleaved with exact coordinate
/// maximizations, then allocates from the per-cell argmin sets, resolving
/// ties with a small transportation LP so mass targets are met exactly.
BathtubSolution solve_bathtub(const BathtubInstance& instance, double tol = -1.0);

/// Exact optimum by the dense simplex; test/CLI oracle for desk-scale
/// instances (phases * cells <= 40 variables).
struct BathtubLpResult {
  double value = 0.0;
  Eigen::MatrixXd s;
};
BathtubLpResult brute_force_lp(const BathtubInstance& instance);

}  // namespace mmflow

#pragma once

#include <Eigen/Dense>

namespace mmflow {

struct LpResult {
  bool feasible = false;
  bool bounded = true;
  double value = 0.0;
  Eigen::VectorXd x;
  Eigen::VectorXd dual;  // row multipliers y: A^T y <= c, y.b = value at optimum
  int iterations = 0;
};

/// Dense two-phase primal simplex with Bland's rule for
///   min c.x  subject to  A x = b, x >= 0.
///
/// Rows may be linearly dependent; redundant rows are detected in phase 1 and
/// their multipliers are returned as 0. Intended for desk-scale instances
/// (a few hundred variables).
LpResult solve_lp_equality(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                           const Eigen::VectorXd& c, int max_iterations = 100000);

}  // namespace mmflow

#include "mmflow/lp.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace mmflow {

namespace {

struct SimplexState {
  Eigen::MatrixXd A;  // m x n, artificials appended
  Eigen::VectorXd b;  // >= 0
  std::vector<int> basis;
  int iterations = 0;
};

// One simplex run with Bland's rule on the given cost vector over the
// currently allowed columns. Returns false if unbounded.
bool run_simplex(SimplexState& st, const Eigen::VectorXd& cost, int n_allowed, int max_iterations,
                 Eigen::VectorXd& x_basic, Eigen::VectorXd& y) {
  const int m = static_cast<int>(st.A.rows());
  const double scale = std::max(1.0, cost.cwiseAbs().maxCoeff());
  const double tol = 1e-11 * scale;

  while (true) {
    if (++st.iterations > max_iterations) {
      throw std::runtime_error("solve_lp_equality: iteration cap exceeded");
    }
    Eigen::MatrixXd B(m, m);
    Eigen::VectorXd cb(m);
    for (int i = 0; i < m; ++i) {
      B.col(i) = st.A.col(st.basis[i]);
      cb[i] = cost[st.basis[i]];
    }
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(B);
    x_basic = lu.solve(st.b);
    y = lu.transpose().solve(cb);

    // Bland: entering = smallest index with negative reduced cost.
    int entering = -1;
    for (int j = 0; j < n_allowed; ++j) {
      bool in_basis = false;
      for (int idx : st.basis) {
        if (idx == j) {
          in_basis = true;
          break;
        }
      }
      if (in_basis) continue;
      const double reduced = cost[j] - y.dot(st.A.col(j));
      if (reduced < -tol) {
        entering = j;
        break;
      }
    }
    if (entering < 0) return true;  // optimal

    Eigen::VectorXd d = lu.solve(st.A.col(entering));
    // Ratio test; Bland tie-break on the leaving variable index.
    int leave = -1;
    double best_ratio = 0.0;
    for (int i = 0; i < m; ++i) {
      if (d[i] > 1e-11) {
        const double ratio = std::max(x_basic[i], 0.0) / d[i];
        if (leave < 0 || ratio < best_ratio - 1e-14 ||
            (std::abs(ratio - best_ratio) <= 1e-14 && st.basis[i] < st.basis[leave])) {
          leave = i;
          best_ratio = ratio;
        }
      }
    }
    if (leave < 0) return false;  // unbounded
    st.basis[leave] = entering;
  }
}

}  // namespace

LpResult solve_lp_equality(const Eigen::MatrixXd& A_in, const Eigen::VectorXd& b_in,
                           const Eigen::VectorXd& c, int max_iterations) {
  const int m = static_cast<int>(A_in.rows());
  const int n = static_cast<int>(A_in.cols());
  if (b_in.size() != m || c.size() != n) {
    throw std::invalid_argument("solve_lp_equality: shape mismatch");
  }

  LpResult result;
  result.x = Eigen::VectorXd::Zero(n);
  result.dual = Eigen::VectorXd::Zero(m);

  SimplexState st;
  st.A.resize(m, n + m);
  st.b = b_in;
  st.A.leftCols(n) = A_in;
  st.A.rightCols(m).setZero();
  std::vector<bool> flipped(m, false);
  for (int i = 0; i < m; ++i) {
    if (st.b[i] < 0.0) {
      st.b[i] = -st.b[i];
      st.A.row(i).head(n) = -st.A.row(i).head(n);
      flipped[i] = true;
    }
    st.A(i, n + i) = 1.0;
    st.basis.push_back(n + i);
  }

  const double bscale = std::max(1.0, st.b.cwiseAbs().maxCoeff());

  // Phase 1: minimize the sum of artificials.
  Eigen::VectorXd phase1_cost = Eigen::VectorXd::Zero(n + m);
  phase1_cost.tail(m).setOnes();
  Eigen::VectorXd xb, y;
  if (!run_simplex(st, phase1_cost, n + m, max_iterations, xb, y)) {
    throw std::runtime_error("solve_lp_equality: phase 1 unbounded");
  }
  double art_sum = 0.0;
  for (int i = 0; i < m; ++i) {
    if (st.basis[i] >= n) art_sum += std::max(xb[i], 0.0);
  }
  if (art_sum > 1e-9 * bscale) {
    result.feasible = false;
    return result;
  }

  // Drive remaining (zero-valued) artificials out of the basis where
  // possible; rows that cannot be pivoted are redundant and effectively
  // stay pinned to their artificial at level zero.
  for (int i = 0; i < m; ++i) {
    if (st.basis[i] < n) continue;
    Eigen::MatrixXd B(m, m);
    for (int k = 0; k < m; ++k) B.col(k) = st.A.col(st.basis[k]);
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(B);
    for (int j = 0; j < n; ++j) {
      bool in_basis = false;
      for (int idx : st.basis) {
        if (idx == j) {
          in_basis = true;
          break;
        }
      }
      if (in_basis) continue;
      Eigen::VectorXd d = lu.solve(st.A.col(j));
      if (std::abs(d[i]) > 1e-9) {
        st.basis[i] = j;
        break;
      }
    }
  }

  // Phase 2 on the original costs; artificial columns are no longer allowed
  // to enter (their residual presence marks redundant rows).
  Eigen::VectorXd phase2_cost = Eigen::VectorXd::Zero(n + m);
  phase2_cost.head(n) = c;
  if (!run_simplex(st, phase2_cost, n, max_iterations, xb, y)) {
    result.feasible = true;
    result.bounded = false;
    return result;
  }

  result.feasible = true;
  for (int i = 0; i < m; ++i) {
    if (st.basis[i] < n) result.x[st.basis[i]] = std::max(xb[i], 0.0);
  }
  result.value = c.dot(result.x);
  // Undo the row sign flips in the duals.
  for (int i = 0; i < m; ++i) {
    result.dual[i] = flipped[i] ? -y[i] : y[i];
  }
  result.iterations = st.iterations;
  return result;
}

}  // namespace mmflow

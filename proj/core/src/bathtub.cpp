#include "mmflow/bathtub.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace mmflow {

void BathtubInstance::validate() const {
  const int n = cell_count();
  if (n == 0 || phase_count() == 0) throw std::invalid_argument("bathtub: empty instance");
  if (omega.size() != n) throw std::invalid_argument("bathtub: omega size mismatch");
  if (m.size() != phase_count()) throw std::invalid_argument("bathtub: m size mismatch");
  if (!F.allFinite()) throw std::invalid_argument("bathtub: F must be finite");
  if (omega.minCoeff() < 0.0) throw std::invalid_argument("bathtub: omega must be nonnegative");
  if (m.minCoeff() <= 0.0) throw std::invalid_argument("bathtub: masses must be positive");
  const double scale = std::max(1.0, omega.sum());
  if (std::abs(m.sum() - omega.sum()) > 1e-9 * scale) {
    throw std::invalid_argument("bathtub: infeasible totals (sum m != sum omega)");
  }
}

double dual_value(const BathtubInstance& instance, const Eigen::VectorXd& alpha) {
  if (alpha.size() != instance.phase_count()) {
    throw std::invalid_argument("dual_value: alpha size mismatch");
  }
  double j = -alpha.dot(instance.m);
  for (int x = 0; x < instance.cell_count(); ++x) {
    j += (instance.F.col(x) + alpha).minCoeff() * instance.omega[x];
  }
  return j;
}

namespace {

// Exact maximization of J over one coordinate, the others fixed. J is
// piecewise linear and concave in alpha_i with breakpoints at
// r(x) - F_i(x), r(x) = min over the other phases; the maximizer is the
// omega-weighted quantile where the slope changes sign.
double coordinate_maximizer(const BathtubInstance& inst, const Eigen::VectorXd& alpha, int i) {
  const int P = inst.phase_count();
  const int n = inst.cell_count();
  if (P == 1) return alpha[i];

  std::vector<std::pair<double, double>> breaks;  // (t_x, omega_x)
  breaks.reserve(n);
  for (int x = 0; x < n; ++x) {
    double r = std::numeric_limits<double>::infinity();
    for (int j = 0; j < P; ++j) {
      if (j != i) r = std::min(r, inst.F(j, x) + alpha[j]);
    }
    breaks.emplace_back(r - inst.F(i, x), inst.omega[x]);
  }
  std::sort(breaks.begin(), breaks.end());

  const double target = inst.omega.sum() - inst.m[i];
  const double slack = 1e-15 * std::max(1.0, inst.omega.sum());
  double cum = 0.0;
  for (const auto& [t, w] : breaks) {
    cum += w;
    if (cum >= target - slack) return t;
  }
  return breaks.back().first;
}

void normalize_min_zero(Eigen::VectorXd& alpha) { alpha.array() -= alpha.minCoeff(); }

struct ClosureResult {
  bool feasible = false;
  Eigen::MatrixXd s;
  double primal = 0.0;
  std::vector<int> tie_cells;
};

// Allocation from the per-cell argmin sets at the given alpha. Cells whose
// argmin set is a singleton are forced; the remaining mass targets are met
// by a small LP over the tie cells restricted to their argmin sets.
ClosureResult resolve_allocation(const BathtubInstance& inst, const Eigen::VectorXd& alpha,
                                 double tie_tol) {
  const int P = inst.phase_count();
  const int n = inst.cell_count();
  ClosureResult out;
  out.s = Eigen::MatrixXd::Zero(P, n);

  Eigen::VectorXd residual = inst.m;
  std::vector<int> tie_cells;
  std::vector<std::vector<int>> tie_sets;
  for (int x = 0; x < n; ++x) {
    const Eigen::VectorXd col = inst.F.col(x) + alpha;
    const double lam = col.minCoeff();
    std::vector<int> argmin;
    for (int j = 0; j < P; ++j) {
      if (col[j] <= lam + tie_tol) argmin.push_back(j);
    }
    if (argmin.size() == 1) {
      out.s(argmin[0], x) = inst.omega[x];
      residual[argmin[0]] -= inst.omega[x];
    } else {
      tie_cells.push_back(x);
      tie_sets.push_back(std::move(argmin));
    }
  }

  const double feas_tol = 1e-10 * std::max(1.0, inst.omega.sum());
  if (residual.minCoeff() < -feas_tol) return out;  // over-assigned: infeasible tie set

  if (!tie_cells.empty()) {
    // LP over allowed (tie cell, phase) arcs: minimize F restricted to the
    // argmin sets, per-cell sums = omega, per-phase sums = residual. The
    // last phase row is implied and dropped.
    std::vector<std::pair<int, int>> arcs;  // (tie index, phase)
    for (size_t t = 0; t < tie_cells.size(); ++t) {
      for (int j : tie_sets[t]) arcs.emplace_back(static_cast<int>(t), j);
    }
    const int T = static_cast<int>(tie_cells.size());
    const int rows = T + P - 1;
    const int cols = static_cast<int>(arcs.size());
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(rows, cols);
    Eigen::VectorXd b(rows), c(cols);
    for (int k = 0; k < cols; ++k) {
      const auto [t, j] = arcs[k];
      A(t, k) = 1.0;
      if (j < P - 1) A(T + j, k) = 1.0;
      c[k] = inst.F(j, tie_cells[t]);
    }
    for (int t = 0; t < T; ++t) b[t] = inst.omega[tie_cells[t]];
    for (int j = 0; j < P - 1; ++j) b[T + j] = std::max(residual[j], 0.0);

    LpResult lp = solve_lp_equality(A, b, c);
    if (!lp.feasible) return out;
    for (int k = 0; k < cols; ++k) {
      const auto [t, j] = arcs[k];
      out.s(j, tie_cells[t]) += lp.x[k];
    }
  } else {
    if (residual.cwiseAbs().maxCoeff() > feas_tol) return out;
  }

  out.feasible = true;
  out.tie_cells = std::move(tie_cells);
  out.primal = (inst.F.array() * out.s.array()).sum();
  return out;
}

}  // namespace

BathtubSolution solve_bathtub(const BathtubInstance& instance, double tol) {
  instance.validate();
  const int P = instance.phase_count();
  const int n = instance.cell_count();
  const double f_inf = instance.F.cwiseAbs().maxCoeff();
  const double omega_sum = instance.omega.sum();
  const double gap_tol = tol > 0.0 ? tol : 1e-9 * (1.0 + f_inf * omega_sum);
  const double tie_tol_max = 1e-7 * (1.0 + f_inf);

  BathtubSolution sol;
  sol.alpha = Eigen::VectorXd::Zero(P);

  // Single phase: the feasible set is the singleton {omega}.
  if (P == 1) {
    sol.s = instance.omega.transpose();
    sol.lambda = instance.F.row(0).transpose();
    sol.primal_value = instance.F.row(0).dot(instance.omega);
    sol.dual_value = sol.primal_value;
    sol.converged = true;
    return sol;
  }

  // Feasible warm primal: proportional fill. Seeds the Polyak target.
  double best_primal = 0.0;
  {
    const double total = instance.m.sum();
    for (int j = 0; j < P; ++j) {
      best_primal += instance.F.row(j).dot(instance.omega) * (instance.m[j] / total);
    }
  }

  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(P);
  const double sel_tol = 1e-12 * (1.0 + f_inf);
  auto finish = [&](const ClosureResult& closure, int iterations) {
    sol.s = closure.s;
    sol.alpha = alpha;
    sol.lambda.resize(n);
    for (int x = 0; x < n; ++x) sol.lambda[x] = (instance.F.col(x) + alpha).minCoeff();
    sol.primal_value = closure.primal;
    sol.dual_value = dual_value(instance, alpha);
    sol.tie_cells = closure.tie_cells;
    sol.iterations = iterations;
    sol.converged = true;
  };

  int iterations = 0;
  const int max_rounds = 60;
  for (int round = 0; round < max_rounds; ++round) {
    // Exact coordinate-maximization sweeps until J stops improving.
    double j_prev = dual_value(instance, alpha);
    for (int sweep = 0; sweep < 200; ++sweep) {
      for (int i = 0; i < P; ++i) {
        alpha[i] = coordinate_maximizer(instance, alpha, i);
      }
      normalize_min_zero(alpha);
      ++iterations;
      const double j_now = dual_value(instance, alpha);
      if (j_now <= j_prev + 1e-14 * (1.0 + std::abs(j_prev))) break;
      j_prev = j_now;
    }

    // Closure: try allocating with a ladder of tie tolerances.
    const double j_alpha = dual_value(instance, alpha);
    for (double tt : {1e-12 * (1.0 + f_inf), 1e-10 * (1.0 + f_inf), 1e-8 * (1.0 + f_inf),
                      tie_tol_max}) {
      ClosureResult closure = resolve_allocation(instance, alpha, tt);
      if (!closure.feasible) continue;
      best_primal = std::min(best_primal, closure.primal);
      if (closure.primal - j_alpha <= gap_tol * (1.0 + std::abs(closure.primal))) {
        finish(closure, iterations);
        return sol;
      }
    }

    // Polyak supergradient phase to move off the stalled corner.
    for (int k = 0; k < 50 * P; ++k) {
      ++iterations;
      Eigen::VectorXd g = -instance.m;
      for (int x = 0; x < n; ++x) {
        const Eigen::VectorXd col = instance.F.col(x) + alpha;
        const double lam = col.minCoeff();
        int count = 0;
        for (int j = 0; j < P; ++j) {
          if (col[j] <= lam + sel_tol) ++count;
        }
        const double share = instance.omega[x] / count;
        for (int j = 0; j < P; ++j) {
          if (col[j] <= lam + sel_tol) g[j] += share;
        }
      }
      const double gnorm2 = g.squaredNorm();
      if (gnorm2 < 1e-30) break;
      const double j_now = dual_value(instance, alpha);
      const double step = std::max(best_primal - j_now, gap_tol) / gnorm2;
      alpha += step * g;
      normalize_min_zero(alpha);
    }
  }

  std::ostringstream diag;
  diag << "solve_bathtub: ascent stagnated without dual=primal closure; dual="
       << dual_value(instance, alpha) << " best primal=" << best_primal;
  sol.diagnostic = diag.str();
  sol.converged = false;
  sol.alpha = alpha;
  return sol;
}

BathtubLpResult brute_force_lp(const BathtubInstance& instance) {
  instance.validate();
  const int P = instance.phase_count();
  const int n = instance.cell_count();
  if (P * n > 40) {
    throw std::invalid_argument("brute_force_lp: size cap exceeded (phases * cells > 40)");
  }
  // Variables s_i(x) laid out phase-major; per-cell rows then per-phase rows
  // with the last phase row dropped as redundant.
  const int rows = n + P - 1;
  const int cols = P * n;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(rows, cols);
  Eigen::VectorXd b(rows), c(cols);
  for (int j = 0; j < P; ++j) {
    for (int x = 0; x < n; ++x) {
      const int k = j * n + x;
      A(x, k) = 1.0;
      if (j < P - 1) A(n + j, k) = 1.0;
      c[k] = instance.F(j, x);
    }
  }
  b.head(n) = instance.omega;
  for (int j = 0; j < P - 1; ++j) b[n + j] = instance.m[j];

  LpResult lp = solve_lp_equality(A, b, c);
  if (!lp.feasible) throw std::runtime_error("brute_force_lp: infeasible instance");
  BathtubLpResult out;
  out.value = lp.value;
  out.s.resize(P, n);
  for (int j = 0; j < P; ++j) {
    for (int x = 0; x < n; ++x) out.s(j, x) = lp.x[j * n + x];
  }
  return out;
}

}  // namespace mmflow

#include "mmflow/transport.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mmflow {

namespace {

constexpr double kBalanceTol = 1e-12;

void check_inputs(const Eigen::MatrixXd& cost, const MassVector& a, const MassVector& b) {
  if (cost.rows() != a.size() || cost.cols() != b.size()) {
    throw std::invalid_argument("transport: cost shape does not match marginals");
  }
  const double scale = std::max({1.0, std::abs(a.total), std::abs(b.total)});
  if (std::abs(a.total - b.total) > kBalanceTol * scale) {
    throw std::invalid_argument("transport: unbalanced totals");
  }
  if (cost.minCoeff() < 0.0) {
    throw std::invalid_argument("transport: negative cost entry");
  }
}

std::vector<int> active_indices(const Eigen::VectorXd& w) {
  std::vector<int> idx;
  for (int i = 0; i < w.size(); ++i) {
    if (w[i] > 0.0) idx.push_back(i);
  }
  return idx;
}

// ---------------------------------------------------------------------------
// Transportation simplex (MODI / u-v method) on the pruned dense instance.
// Basis is a spanning tree of the bipartite graph with exactly m + k - 1
// cells, possibly degenerate. Deterministic first-index pivot rules.
// ---------------------------------------------------------------------------
class TransportSimplex {
 public:
  TransportSimplex(const Eigen::MatrixXd& C, Eigen::VectorXd a, Eigen::VectorXd b)
      : C_(C), a_(std::move(a)), b_(std::move(b)), m_(static_cast<int>(a_.size())),
        k_(static_cast<int>(b_.size())) {
    X_ = Eigen::MatrixXd::Zero(m_, k_);
    basic_ = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(m_, k_, false);
  }

  void solve(int max_pivots) {
    northwest_corner();
    const double cscale = std::max(1.0, C_.cwiseAbs().maxCoeff());
    const double tol = 1e-13 * cscale;
    Eigen::VectorXd u(m_), v(k_);
    for (iterations_ = 0; iterations_ < max_pivots; ++iterations_) {
      compute_potentials(u, v);
      int ei = -1, ej = -1;
      double most_negative = -tol;
      for (int i = 0; i < m_ && ei < 0; ++i) {
        for (int j = 0; j < k_; ++j) {
          if (basic_(i, j)) continue;
          const double r = C_(i, j) - u[i] - v[j];
          if (r < most_negative) {
            ei = i;
            ej = j;
            break;  // first sufficiently negative cell in row-major order
          }
        }
      }
      if (ei < 0) {
        u_ = u;
        v_ = v;
        return;
      }
      pivot(ei, ej);
    }
    throw std::runtime_error("exact_w2: pivot cap exceeded");
  }

  const Eigen::MatrixXd& plan() const { return X_; }
  const Eigen::VectorXd& u() const { return u_; }
  const Eigen::VectorXd& v() const { return v_; }
  int iterations() const { return iterations_; }

 private:
  void northwest_corner() {
    Eigen::VectorXd ra = a_, rb = b_;
    int i = 0, j = 0;
    int placed = 0;
    while (placed < m_ + k_ - 1) {
      const double amount = std::min(ra[i], rb[j]);
      X_(i, j) = amount;
      basic_(i, j) = true;
      ++placed;
      ra[i] -= amount;
      rb[j] -= amount;
      const bool row_done = ra[i] <= rb[j];
      if (row_done && i + 1 < m_) {
        ++i;
      } else if (j + 1 < k_) {
        ++j;
      } else if (i + 1 < m_) {
        ++i;
      } else {
        break;
      }
    }
  }

  // Solve u_i + v_j = C_ij over the basis tree, u_0 = 0.
  void compute_potentials(Eigen::VectorXd& u, Eigen::VectorXd& v) const {
    std::vector<bool> udone(m_, false), vdone(k_, false);
    std::vector<int> row_stack{0};
    std::vector<int> col_stack;
    u[0] = 0.0;
    udone[0] = true;
    while (!row_stack.empty() || !col_stack.empty()) {
      if (!row_stack.empty()) {
        const int i = row_stack.back();
        row_stack.pop_back();
        for (int j = 0; j < k_; ++j) {
          if (basic_(i, j) && !vdone[j]) {
            v[j] = C_(i, j) - u[i];
            vdone[j] = true;
            col_stack.push_back(j);
          }
        }
      } else {
        const int j = col_stack.back();
        col_stack.pop_back();
        for (int i = 0; i < m_; ++i) {
          if (basic_(i, j) && !udone[i]) {
            u[i] = C_(i, j) - v[j];
            udone[i] = true;
            row_stack.push_back(i);
          }
        }
      }
    }
    // A spanning tree reaches every node; guard against a broken basis.
    for (int i = 0; i < m_; ++i) {
      if (!udone[i]) throw std::runtime_error("exact_w2: basis lost connectivity");
    }
    for (int j = 0; j < k_; ++j) {
      if (!vdone[j]) throw std::runtime_error("exact_w2: basis lost connectivity");
    }
  }

  // Unique alternating cycle closed by the entering cell (ei, ej); found by
  // DFS over basic cells from row ei to column ej.
  bool find_path(int ei, int ej, std::vector<std::pair<int, int>>& path) const {
    // state: current row; path holds (i, j) pairs alternating (row->col).
    struct Frame {
      int row;
      int next_col;
    };
    std::vector<int> col_from_row(m_, -1);   // column used to enter this row
    std::vector<int> row_from_col(k_, -1);   // row used to enter this column
    std::vector<bool> row_seen(m_, false), col_seen(k_, false);
    row_seen[ei] = true;
    std::vector<int> stack{ei};
    while (!stack.empty()) {
      const int i = stack.back();
      stack.pop_back();
      for (int j = 0; j < k_; ++j) {
        if (!basic_(i, j) || col_seen[j]) continue;
        col_seen[j] = true;
        row_from_col[j] = i;
        if (j == ej) {
          // reconstruct alternating path ei -> ... -> ej
          path.clear();
          int cj = j;
          while (true) {
            const int ri = row_from_col[cj];
            path.emplace_back(ri, cj);
            if (ri == ei) break;
            cj = col_from_row[ri];
            path.emplace_back(ri, cj);
          }
          std::reverse(path.begin(), path.end());
          return true;
        }
        for (int i2 = 0; i2 < m_; ++i2) {
          if (basic_(i2, j) && !row_seen[i2]) {
            row_seen[i2] = true;
            col_from_row[i2] = j;
            stack.push_back(i2);
          }
        }
      }
    }
    return false;
  }

  void pivot(int ei, int ej) {
    std::vector<std::pair<int, int>> path;
    if (!find_path(ei, ej, path)) {
      throw std::runtime_error("exact_w2: entering cell closes no cycle");
    }
    // Cycle: entering (ei, ej) gets +, then alternate along the path from
    // (ei, *) back to (*, ej). Path cells alternate row-shared / col-shared
    // with the entering arc; minus positions are those sharing a row with a
    // plus position.
    // path = [(ei, j1), (i2, j1), (i2, j2), ..., (ik, ej)] alternates -, +, -, ...
    double theta = std::numeric_limits<double>::infinity();
    int leave = -1;
    for (size_t t = 0; t < path.size(); t += 2) {  // minus positions
      const auto [pi, pj] = path[t];
      if (X_(pi, pj) < theta) {
        theta = X_(pi, pj);
        leave = static_cast<int>(t);
      }
    }
    if (leave < 0) throw std::runtime_error("exact_w2: degenerate cycle");
    X_(ei, ej) += theta;
    for (size_t t = 0; t < path.size(); ++t) {
      const auto [pi, pj] = path[t];
      if (t % 2 == 0) {
        X_(pi, pj) -= theta;
      } else {
        X_(pi, pj) += theta;
      }
    }
    const auto [li, lj] = path[leave];
    basic_(li, lj) = false;
    X_(li, lj) = 0.0;
    basic_(ei, ej) = true;
  }

  const Eigen::MatrixXd& C_;
  Eigen::VectorXd a_, b_;
  int m_, k_;
  Eigen::MatrixXd X_;
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> basic_;
  Eigen::VectorXd u_, v_;
  int iterations_ = 0;
};

// c-transform backfill of potentials for pruned (zero-mass) cells.
void backfill_potentials(const Eigen::MatrixXd& cost, const std::vector<int>& act_a,
                         const std::vector<int>& act_b, Eigen::VectorXd& phi,
                         Eigen::VectorXd& psi) {
  const int n_a = static_cast<int>(cost.rows());
  const int n_b = static_cast<int>(cost.cols());
  std::vector<bool> a_active(n_a, false), b_active(n_b, false);
  for (int i : act_a) a_active[i] = true;
  for (int j : act_b) b_active[j] = true;
  for (int j = 0; j < n_b; ++j) {
    if (b_active[j]) continue;
    double best = std::numeric_limits<double>::infinity();
    for (int i : act_a) best = std::min(best, cost(i, j) - phi[i]);
    psi[j] = best;
  }
  for (int i = 0; i < n_a; ++i) {
    if (a_active[i]) continue;
    double best = std::numeric_limits<double>::infinity();
    for (int j = 0; j < n_b; ++j) best = std::min(best, cost(i, j) - psi[j]);
    phi[i] = best;
  }
}

void normalize_reference(Eigen::VectorXd& phi, Eigen::VectorXd& psi) {
  const double shift = phi[0];
  phi.array() -= shift;
  psi.array() += shift;
}

}  // namespace

TransportResult exact_w2(const Eigen::MatrixXd& cost, const MassVector& a, const MassVector& b) {
  check_inputs(cost, a, b);
  const int n_a = a.size();
  const int n_b = b.size();

  TransportResult result;
  result.mode = TransportMode::exact;
  result.phi = Eigen::VectorXd::Zero(n_a);
  result.psi = Eigen::VectorXd::Zero(n_b);
  result.plan = Eigen::MatrixXd::Zero(n_a, n_b);

  // Identity fast path: equal marginals need no solve, and the canonical
  // potentials are zero (the simplex duals would be an arbitrary selection
  // since the diagonal support is disconnected).
  if (n_a == n_b && (a.mass.array() == b.mass.array()).all()) {
    result.plan.diagonal() = a.mass;
    result.value = 0.0;
    for (int i = 0; i < n_a; ++i) result.value += a.mass[i] * cost(i, i);
    result.dual_value = 0.0;
    return result;
  }

  const auto act_a = active_indices(a.mass);
  const auto act_b = active_indices(b.mass);
  if (act_a.empty() || act_b.empty()) {
    throw std::invalid_argument("exact_w2: empty marginal");
  }

  const int m = static_cast<int>(act_a.size());
  const int k = static_cast<int>(act_b.size());
  Eigen::MatrixXd C(m, k);
  Eigen::VectorXd av(m), bv(k);
  for (int i = 0; i < m; ++i) av[i] = a.mass[act_a[i]];
  for (int j = 0; j < k; ++j) bv[j] = b.mass[act_b[j]];
  // Rescale the target marginal so that the pruned instance balances exactly.
  bv *= av.sum() / bv.sum();
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < k; ++j) C(i, j) = cost(act_a[i], act_b[j]);
  }

  TransportSimplex simplex(C, av, bv);
  simplex.solve(std::max(20000, 400 * (m + k)));

  for (int i = 0; i < m; ++i) {
    result.phi[act_a[i]] = simplex.u()[i];
    for (int j = 0; j < k; ++j) result.plan(act_a[i], act_b[j]) = simplex.plan()(i, j);
  }
  for (int j = 0; j < k; ++j) result.psi[act_b[j]] = simplex.v()[j];
  backfill_potentials(cost, act_a, act_b, result.phi, result.psi);
  normalize_reference(result.phi, result.psi);

  result.value = (result.plan.array() * cost.array()).sum();
  result.dual_value = result.phi.dot(a.mass) + result.psi.dot(b.mass);
  result.iterations = simplex.iterations();
  return result;
}

double median_offdiagonal(const Eigen::MatrixXd& cost) {
  std::vector<double> vals;
  vals.reserve(cost.size());
  for (int i = 0; i < cost.rows(); ++i) {
    for (int j = 0; j < cost.cols(); ++j) {
      if (i != j) vals.push_back(cost(i, j));
    }
  }
  if (vals.empty()) return 1.0;
  const size_t mid = vals.size() / 2;
  std::nth_element(vals.begin(), vals.begin() + mid, vals.end());
  return vals[mid];
}

TransportResult sinkhorn_w2(const Eigen::MatrixXd& cost, const MassVector& a, const MassVector& b,
                            double epsilon, const SinkhornOptions& opts) {
  check_inputs(cost, a, b);
  if (!(epsilon > 0.0)) throw std::invalid_argument("sinkhorn_w2: epsilon must be positive");

  const int n_a = a.size();
  const int n_b = b.size();
  const auto act_a = active_indices(a.mass);
  const auto act_b = active_indices(b.mass);
  if (act_a.empty() || act_b.empty()) {
    throw std::invalid_argument("sinkhorn_w2: empty marginal");
  }
  const int m = static_cast<int>(act_a.size());
  const int k = static_cast<int>(act_b.size());

  Eigen::MatrixXd C(m, k);
  Eigen::VectorXd av(m), bv(k);
  for (int i = 0; i < m; ++i) av[i] = a.mass[act_a[i]];
  for (int j = 0; j < k; ++j) bv[j] = b.mass[act_b[j]];
  bv *= av.sum() / bv.sum();
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < k; ++j) C(i, j) = cost(act_a[i], act_b[j]);
  }
  const Eigen::VectorXd loga = av.array().log();
  const Eigen::VectorXd logb = bv.array().log();

  Eigen::VectorXd f = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(k);
  if (opts.warm_phi && opts.warm_phi->size() == n_a) {
    for (int i = 0; i < m; ++i) f[i] = (*opts.warm_phi)[act_a[i]];
  }
  if (opts.warm_psi && opts.warm_psi->size() == n_b) {
    for (int j = 0; j < k; ++j) g[j] = (*opts.warm_psi)[act_b[j]];
  }

  const double total = av.sum();
  const double tol = opts.tol_rel * total;

  auto lse_cols = [&](const Eigen::VectorXd& fv, Eigen::VectorXd& out) {
    // out_j = log sum_i exp((fv_i - C_ij)/eps + loga_i)
    for (int j = 0; j < k; ++j) {
      double mx = -std::numeric_limits<double>::infinity();
      for (int i = 0; i < m; ++i) {
        mx = std::max(mx, (fv[i] - C(i, j)) / epsilon + loga[i]);
      }
      double s = 0.0;
      for (int i = 0; i < m; ++i) {
        s += std::exp((fv[i] - C(i, j)) / epsilon + loga[i] - mx);
      }
      out[j] = mx + std::log(s);
    }
  };
  auto lse_rows = [&](const Eigen::VectorXd& gv, Eigen::VectorXd& out) {
    for (int i = 0; i < m; ++i) {
      double mx = -std::numeric_limits<double>::infinity();
      for (int j = 0; j < k; ++j) {
        mx = std::max(mx, (gv[j] - C(i, j)) / epsilon + logb[j]);
      }
      double s = 0.0;
      for (int j = 0; j < k; ++j) {
        s += std::exp((gv[j] - C(i, j)) / epsilon + logb[j] - mx);
      }
      out[i] = mx + std::log(s);
    }
  };

  TransportResult result;
  result.mode = TransportMode::entropic;
  result.epsilon = epsilon;
  result.converged = false;

  Eigen::VectorXd work_k(k), work_m(m);
  double err = std::numeric_limits<double>::infinity();
  int it = 0;
  for (it = 1; it <= opts.max_iterations; ++it) {
    lse_cols(f, work_k);
    Eigen::VectorXd g_new = -epsilon * work_k.array();
    // Column marginal of the current plan equals b_j exp((g_j - g_new_j)/eps).
    err = (bv.array() * ((g - g_new).array() / epsilon).exp() - bv.array()).abs().sum();
    g = g_new;
    lse_rows(g, work_m);
    f = -epsilon * work_m.array();
    if (err < tol) {
      result.converged = true;
      break;
    }
  }
  result.iterations = std::min(it, opts.max_iterations);
  result.marginal_error = err;

  result.phi = Eigen::VectorXd::Zero(n_a);
  result.psi = Eigen::VectorXd::Zero(n_b);
  for (int i = 0; i < m; ++i) result.phi[act_a[i]] = f[i];
  for (int j = 0; j < k; ++j) result.psi[act_b[j]] = g[j];
  backfill_potentials(cost, act_a, act_b, result.phi, result.psi);
  normalize_reference(result.phi, result.psi);

  // Plan cost; assembled row by row to keep memory at one row when the full
  // plan is not requested.
  double value = 0.0;
  if (opts.want_plan) result.plan = Eigen::MatrixXd::Zero(n_a, n_b);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < k; ++j) {
      const double t = std::exp((f[i] + g[j] - C(i, j)) / epsilon + loga[i] + logb[j]);
      value += t * C(i, j);
      if (opts.want_plan) result.plan(act_a[i], act_b[j]) = t;
    }
  }
  result.value = value;
  result.dual_value = result.phi.dot(a.mass) + result.psi.dot(b.mass);
  return result;
}

GlobalW2Result global_w2(const CostBundle& bundle, const PhaseField& s, const PhaseField& s_hat,
                         const GlobalW2Options& opts) {
  if (s.phase_count() != s_hat.phase_count() || s.phase_count() != bundle.phase_count()) {
    throw std::invalid_argument("global_w2: phase-count mismatch");
  }
  GlobalW2Result out;
  out.per_phase.resize(s.phase_count());
  for (int i = 0; i < s.phase_count(); ++i) {
    const MassVector ai = s.phase(i);
    const MassVector bi = s_hat.phase(i);
    TransportResult r;
    if (opts.mode == TransportMode::exact) {
      r = exact_w2(bundle.csq[i], ai, bi);
    } else {
      const double eps = opts.epsilon_rel * median_offdiagonal(bundle.csq[i]);
      r = sinkhorn_w2(bundle.csq[i], ai, bi, eps, opts.sinkhorn);
    }
    out.per_phase[i] = r.value;
    out.total += r.value;
    if (opts.keep_solves) out.solves.push_back(std::move(r));
  }
  return out;
}

}  // namespace mmflow

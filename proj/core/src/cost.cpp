#include "mmflow/cost.hpp"

#include <cmath>
#include <queue>
#include <sstream>

namespace mmflow {

double eight_neighbor_stretch() { return std::sqrt(4.0 - 2.0 * std::sqrt(2.0)); }

namespace {

// Edge weights for one phase; shared by all Dijkstra sources.
std::vector<double> edge_weights(const Grid& grid, const MediumSpec& medium, int phase) {
  std::vector<double> w(grid.edges.size());
  const double mu = medium.viscosity[phase];
  for (size_t e = 0; e < grid.edges.size(); ++e) {
    const auto& edge = grid.edges[e];
    const auto& pa = grid.cell_centers[edge.a];
    const auto& pb = grid.cell_centers[edge.b];
    Eigen::Vector2d d(pb[0] - pa[0], pb[1] - pa[1]);
    const Eigen::Matrix2d K = medium.tensor_mid(edge.a, edge.b);
    Eigen::Matrix2d Kinv;
    if (grid.dim == 1) {
      Kinv.setZero();
      if (!(K(0, 0) > 0.0)) throw std::invalid_argument("geodesic_cost_matrix: K not SPD");
      Kinv(0, 0) = 1.0 / K(0, 0);
    } else {
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(K);
      if (!(es.eigenvalues().minCoeff() > 0.0)) {
        throw std::invalid_argument("geodesic_cost_matrix: K not SPD");
      }
      Kinv = K.inverse();
    }
    w[e] = std::sqrt(mu * d.dot(Kinv * d));
  }
  return w;
}

Eigen::MatrixXd all_pairs_shortest(const Grid& grid, const std::vector<double>& w) {
  const int n = grid.cell_count();
  Eigen::MatrixXd dist(n, n);
  std::vector<double> d(n);
  using Item = std::pair<double, int>;
  for (int src = 0; src < n; ++src) {
    std::fill(d.begin(), d.end(), std::numeric_limits<double>::infinity());
    d[src] = 0.0;
    std::priority_queue<Item, std::vector<Item>, std::greater<Item>> pq;
    pq.emplace(0.0, src);
    while (!pq.empty()) {
      auto [du, u] = pq.top();
      pq.pop();
      if (du > d[u]) continue;
      for (int e : grid.adjacency[u]) {
        const auto& edge = grid.edges[e];
        const int v = edge.a == u ? edge.b : edge.a;
        const double cand = du + w[e];
        if (cand < d[v]) {
          d[v] = cand;
          pq.emplace(cand, v);
        }
      }
    }
    for (int y = 0; y < n; ++y) {
      if (!std::isfinite(d[y])) {
        throw std::runtime_error("geodesic_cost_matrix: neighbor graph not connected");
      }
      dist(src, y) = d[y];
    }
  }
  // Enforce exact symmetry (Dijkstra from x and from y agree to rounding).
  for (int x = 0; x < n; ++x) {
    dist(x, x) = 0.0;
    for (int y = x + 1; y < n; ++y) {
      const double s = std::min(dist(x, y), dist(y, x));
      dist(x, y) = s;
      dist(y, x) = s;
    }
  }
  return dist.array().square().matrix();
}

}  // namespace

Eigen::MatrixXd geodesic_cost_matrix(const Grid& grid, const MediumSpec& medium, int phase) {
  if (phase < 0 || phase >= medium.phase_count) {
    throw std::invalid_argument("geodesic_cost_matrix: phase index out of range");
  }
  return all_pairs_shortest(grid, edge_weights(grid, medium, phase));
}

CostBundle build_cost_bundle(const Grid& grid, const MediumSpec& medium) {
  CostBundle bundle;
  bundle.stretch = grid.dim == 2 ? eight_neighbor_stretch() : 1.0;
  bundle.csq.reserve(medium.phase_count);
  for (int i = 0; i < medium.phase_count; ++i) {
    bundle.csq.push_back(geodesic_cost_matrix(grid, medium, i));
  }

  const int n = grid.cell_count();
  bundle.cref_euclid.resize(n, n);
  for (int x = 0; x < n; ++x) {
    for (int y = 0; y < n; ++y) {
      const double d = grid.euclid(x, y);
      bundle.cref_euclid(x, y) = d * d;
    }
  }

  MediumSpec ref = medium;
  ref.isotropic = true;
  ref.kappa = Eigen::VectorXd::Ones(n);
  ref.kappa_lo = ref.kappa_hi = 1.0;
  ref.tensors.clear();
  ref.viscosity.assign(medium.phase_count, 1.0);
  bundle.cref_graph = geodesic_cost_matrix(grid, ref, 0);
  return bundle;
}

ConvexityReport check_geodesic_convexity_isotropic(const Grid& grid, const MediumSpec& medium,
                                                   double boundary_layer, double tol) {
  if (!medium.isotropic) {
    throw std::invalid_argument("check_geodesic_convexity_isotropic: anisotropic input");
  }
  ConvexityReport report;
  std::ostringstream detail;
  const double scale = std::max(1.0, medium.kappa_hi);

  // One pass per axis and per side; the outward normal of a Cartesian box is
  // axis-aligned, so normal differences reduce to line scans.
  struct Scan {
    int axis;
    int dir;  // +1: outward = increasing index, -1: outward = decreasing
  };
  std::vector<Scan> scans = {{0, +1}, {0, -1}};
  if (grid.dim == 2) {
    scans.push_back({1, +1});
    scans.push_back({1, -1});
  }

  auto kappa_at = [&](int i, int j) { return medium.kappa[grid.index(i, j)]; };

  auto flag = [&](int cell, const std::string& why) {
    report.pass = false;
    report.offending_cells.push_back(cell);
    detail << "cell " << cell << ": " << why << "\n";
  };

  for (const auto& scan : scans) {
    const int n_along = scan.axis == 0 ? grid.nx : grid.ny;
    const int n_across = scan.axis == 0 ? grid.ny : grid.nx;
    const double h = scan.axis == 0 ? grid.hx : grid.hy;
    const int layer_cells = std::min<int>(n_along, static_cast<int>(std::floor(boundary_layer / h)) + 1);

    for (int t = 0; t < n_across; ++t) {
      auto cell_at_depth = [&](int depth) {
        // depth 0 = boundary cell of this side, increasing inward
        const int along = scan.dir > 0 ? n_along - 1 - depth : depth;
        return scan.axis == 0 ? grid.index(along, t) : grid.index(t, along);
      };
      auto kap = [&](int depth) {
        const int along = scan.dir > 0 ? n_along - 1 - depth : depth;
        return scan.axis == 0 ? kappa_at(along, t) : kappa_at(t, along);
      };

      // (i) normally non-increasing: kappa must not decrease going inward
      // within the layer.
      for (int depth = 0; depth + 1 < layer_cells; ++depth) {
        if (kap(depth + 1) < kap(depth) - tol * scale) {
          flag(cell_at_depth(depth), "kappa increases toward the boundary");
        }
      }
      // (ii) at the boundary cell: strict decrease outward, or flat to
      // second order. Raw differences, in kappa units.
      if (n_along >= 3) {
        const double d1 = kap(0) - kap(1);                 // outward first difference
        const double d2 = kap(0) - 2.0 * kap(1) + kap(2);  // outward second difference
        const bool strict = d1 < -tol * scale;
        const bool flat = std::abs(d1) <= tol * scale && std::abs(d2) <= tol * scale;
        if (!strict && !flat) {
          flag(cell_at_depth(0), "boundary cell fails strict-decrease/flatness test");
        }
      }
    }
  }

  detail << (report.pass ? "boundary monotonicity hypothesis holds" : "hypothesis violated");
  report.detail = detail.str();
  return report;
}

}  // namespace mmflow

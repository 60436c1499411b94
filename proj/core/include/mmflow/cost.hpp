#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "mmflow/grid.hpp"
#include "mmflow/medium.hpp"

namespace mmflow {

/// Per-phase squared geodesic ground costs plus reference matrices.
///
/// csq[i][x][y] is the squared length of the shortest grid path from x to y
/// where an edge (a,b) costs sqrt(mu_i * K^-1(mid) d.d), d = b - a.
///
/// cref_euclid holds |x-y|^2. cref_graph holds the same graph metric with
/// mu = 1, K = I; it differs from cref_euclid only by the 8-neighbor
/// metrication error (factor <= stretch, exactly 1 on collinear pairs).
struct CostBundle {
  std::vector<Eigen::MatrixXd> csq;
  Eigen::MatrixXd cref_euclid;
  Eigen::MatrixXd cref_graph;
  double stretch = 1.0;

  int phase_count() const { return static_cast<int>(csq.size()); }
};

/// Worst-case graph-path/Euclidean length ratio of the 8-neighbor stencil,
/// attained at a 22.5 degree heading: sqrt(4 - 2*sqrt(2)).
double eight_neighbor_stretch();

Eigen::MatrixXd geodesic_cost_matrix(const Grid& grid, const MediumSpec& medium, int phase);

CostBundle build_cost_bundle(const Grid& grid, const MediumSpec& medium);

/// Result of the boundary-monotonicity screen for isotropic permeability.
/// Advisory: callers report it but never block a run on failure.
struct ConvexityReport {
  bool pass = true;
  std::vector<int> offending_cells;
  std::string detail;
};

/// Checks, on cells within boundary_layer of the box boundary, that kappa is
/// non-increasing along the outward normal (axis-aligned discrete
/// differences), and at boundary cells that either the outward first
/// difference is strictly negative or both first and second differences
/// vanish to tolerance. Requires isotropic mode.
ConvexityReport check_geodesic_convexity_isotropic(const Grid& grid, const MediumSpec& medium,
                                                   double boundary_layer, double tol = 1e-10);

}  // namespace mmflow

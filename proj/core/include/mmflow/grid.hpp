#pragma once

#include <array>
#include <stdexcept>
#include <vector>

namespace mmflow {

/// Uniform cell-centered Cartesian grid on a box, 1-D or 2-D.
struct GridConfig {
  int dim = 1;
  int nx = 0;
  int ny = 1;
  double x0 = 0.0, x1 = 1.0;
  double y0 = 0.0, y1 = 1.0;
};

/// Edge of the geodesic neighbor graph (8-neighbor stencil in 2-D).
struct GridEdge {
  int a = 0, b = 0;  // cell indices, a < b
  double length = 0.0;
  std::array<double, 2> midpoint{0.0, 0.0};
};

/// Face between two axis-aligned neighbors, used by finite-volume operators.
struct GridFace {
  int a = 0, b = 0;   // cell indices, a < b
  int axis = 0;       // 0 = x, 1 = y
  double dist = 0.0;  // center-to-center distance
  double area = 0.0;  // face measure (1 in 1-D, transverse spacing in 2-D)
};

struct Grid {
  int dim = 1;
  int nx = 0, ny = 1;
  double hx = 0.0, hy = 0.0;
  double cell_volume = 0.0;
  std::array<double, 2> origin{0.0, 0.0};
  std::vector<std::array<double, 2>> cell_centers;
  std::vector<GridEdge> edges;        // geodesic graph: axis + diagonal in 2-D
  std::vector<GridFace> faces;        // axis stencil only
  std::vector<std::vector<int>> adjacency;  // edge ids incident to each cell

  int cell_count() const { return static_cast<int>(cell_centers.size()); }
  int index(int i, int j) const { return j * nx + i; }
  int cell_i(int cell) const { return cell % nx; }
  int cell_j(int cell) const { return cell / nx; }

  double euclid(int a, int b) const;
  /// Distance from a cell center to the boundary of the box.
  double boundary_distance(int cell) const;
};

Grid build_grid(const GridConfig& config);

}  // namespace mmflow

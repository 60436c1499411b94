#include "mmflow/grid.hpp"

#include <algorithm>
#include <cmath>

namespace mmflow {

double Grid::euclid(int a, int b) const {
  const auto& pa = cell_centers[a];
  const auto& pb = cell_centers[b];
  return std::hypot(pb[0] - pa[0], pb[1] - pa[1]);
}

double Grid::boundary_distance(int cell) const {
  const auto& p = cell_centers[cell];
  double d = std::min(p[0] - origin[0], origin[0] + nx * hx - p[0]);
  if (dim == 2) {
    d = std::min(d, std::min(p[1] - origin[1], origin[1] + ny * hy - p[1]));
  }
  return d;
}

Grid build_grid(const GridConfig& config) {
  if (config.dim != 1 && config.dim != 2) {
    throw std::invalid_argument("build_grid: dim must be 1 or 2");
  }
  const int nx = config.nx;
  const int ny = config.dim == 2 ? config.ny : 1;
  if (nx <= 0 || ny <= 0) {
    throw std::invalid_argument("build_grid: cell counts must be positive");
  }
  if (config.x1 <= config.x0 || (config.dim == 2 && config.y1 <= config.y0)) {
    throw std::invalid_argument("build_grid: box extents must be positive");
  }

  Grid g;
  g.dim = config.dim;
  g.nx = nx;
  g.ny = ny;
  g.hx = (config.x1 - config.x0) / nx;
  g.hy = config.dim == 2 ? (config.y1 - config.y0) / ny : 1.0;
  g.cell_volume = config.dim == 2 ? g.hx * g.hy : g.hx;
  g.origin = {config.x0, config.dim == 2 ? config.y0 : 0.0};

  g.cell_centers.resize(static_cast<size_t>(nx) * ny);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      g.cell_centers[g.index(i, j)] = {config.x0 + (i + 0.5) * g.hx,
                                       config.dim == 2 ? config.y0 + (j + 0.5) * g.hy : 0.0};
    }
  }

  auto add_edge = [&](int a, int b) {
    if (a > b) std::swap(a, b);
    GridEdge e;
    e.a = a;
    e.b = b;
    e.length = g.euclid(a, b);
    e.midpoint = {0.5 * (g.cell_centers[a][0] + g.cell_centers[b][0]),
                  0.5 * (g.cell_centers[a][1] + g.cell_centers[b][1])};
    g.edges.push_back(e);
  };
  auto add_face = [&](int a, int b, int axis) {
    if (a > b) std::swap(a, b);
    GridFace f;
    f.a = a;
    f.b = b;
    f.axis = axis;
    f.dist = axis == 0 ? g.hx : g.hy;
    f.area = config.dim == 2 ? (axis == 0 ? g.hy : g.hx) : 1.0;
    g.faces.push_back(f);
  };

  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const int c = g.index(i, j);
      if (i + 1 < nx) {
        add_edge(c, g.index(i + 1, j));
        add_face(c, g.index(i + 1, j), 0);
      }
      if (config.dim == 2) {
        if (j + 1 < ny) {
          add_edge(c, g.index(i, j + 1));
          add_face(c, g.index(i, j + 1), 1);
        }
        if (i + 1 < nx && j + 1 < ny) add_edge(c, g.index(i + 1, j + 1));
        if (i > 0 && j + 1 < ny) add_edge(c, g.index(i - 1, j + 1));
      }
    }
  }

  g.adjacency.assign(g.cell_count(), {});
  for (int e = 0; e < static_cast<int>(g.edges.size()); ++e) {
    g.adjacency[g.edges[e].a].push_back(e);
    g.adjacency[g.edges[e].b].push_back(e);
  }
  return g;
}

}  // namespace mmflow

#pragma once

#include <random>

#include "mmflow/cost.hpp"
#include "mmflow/energy.hpp"
#include "mmflow/field.hpp"
#include "mmflow/grid.hpp"
#include "mmflow/medium.hpp"

namespace mmtest {

struct Column {
  mmflow::Grid grid;
  mmflow::MediumSpec medium;
  mmflow::QuadraticCapillaryLaw law;
  mmflow::CostBundle bundle;
  mmflow::PhaseField s0;
};

// 1-D two-phase gravity column: heavy phase 1 starts in the upper half.
inline Column gravity_column(int cells, double capillary_a = 0.5, double top_fraction = 0.8,
                             double gravity = 9.81) {
  Column col{.grid = {}, .medium = {}, .law = mmflow::QuadraticCapillaryLaw::uniform(cells, 1, capillary_a),
             .bundle = {}, .s0 = {}};
  mmflow::GridConfig gc;
  gc.dim = 1;
  gc.nx = cells;
  col.grid = mmflow::build_grid(gc);
  col.medium = mmflow::make_preset_medium("gravity_column", col.grid, 2, {1.0, 1.0}, {1.0, 2.5},
                                          gravity, 0.3, 1.0);
  Eigen::MatrixXd fr(2, cells);
  for (int c = 0; c < cells; ++c) {
    const bool top = col.grid.cell_centers[c][0] >= 0.5;
    fr(1, c) = top ? top_fraction : 1.0 - top_fraction;
    fr(0, c) = 1.0 - fr(1, c);
  }
  col.s0 = mmflow::PhaseField::from_fractions(col.grid, col.medium, fr);
  col.medium.mass = {col.s0.mass.row(0).sum(), col.s0.mass.row(1).sum()};
  col.bundle = mmflow::build_cost_bundle(col.grid, col.medium);
  return col;
}

// Random admissible state with the same per-phase masses as `reference`.
// Built by mixing reference with random per-cell simplex weights and then
// repairing the per-phase totals by moving mass along a fixed cell order.
inline mmflow::PhaseField random_admissible_state(const mmflow::Grid& grid,
                                                  const mmflow::MediumSpec& medium,
                                                  std::mt19937& rng) {
  const int P = medium.phase_count;
  const int n = grid.cell_count();
  std::uniform_real_distribution<double> u(0.05, 1.0);
  Eigen::MatrixXd fr(P, n);
  for (int c = 0; c < n; ++c) {
    double sum = 0.0;
    for (int i = 0; i < P; ++i) {
      fr(i, c) = u(rng);
      sum += fr(i, c);
    }
    fr.col(c) /= sum;
  }
  mmflow::PhaseField s = mmflow::PhaseField::from_fractions(grid, medium, fr);

  // Repair per-phase totals: transfer surplus mass between phases cellwise.
  for (int i = 0; i < P - 1; ++i) {
    double excess = s.mass.row(i).sum() - medium.mass[i];
    for (int c = 0; c < n && std::abs(excess) > 1e-15; ++c) {
      for (int j = i + 1; j < P && std::abs(excess) > 1e-15; ++j) {
        if (excess > 0.0) {
          const double move = std::min(excess, s.mass(i, c));
          s.mass(i, c) -= move;
          s.mass(j, c) += move;
          excess -= move;
        } else {
          const double move = std::min(-excess, s.mass(j, c));
          s.mass(j, c) -= move;
          s.mass(i, c) += move;
          excess += move;
        }
      }
    }
  }
  return s;
}

}  // namespace mmtest

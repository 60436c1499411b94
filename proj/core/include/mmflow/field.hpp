#pragma once

#include <Eigen/Dense>

#include "mmflow/grid.hpp"
#include "mmflow/medium.hpp"

namespace mmflow {

/// Nonnegative cell masses with a declared total.
struct MassVector {
  Eigen::VectorXd mass;
  double total = 0.0;

  static MassVector of(Eigen::VectorXd m);
  static MassVector of(Eigen::VectorXd m, double declared_total);
  int size() const { return static_cast<int>(mass.size()); }
};

/// Per-phase cell masses; the simulator state.
///
/// Row i holds the cell masses of phase i (density * cell volume). A state
/// is admissible when every phase is nonnegative, the per-cell saturation
/// sum(i) mass_i(x) equals porosity(x) * cell_volume, and per-phase totals
/// equal the conserved masses m_i.
struct PhaseField {
  Eigen::MatrixXd mass;  // (N+1) x cells
  double cell_volume = 0.0;

  int phase_count() const { return static_cast<int>(mass.rows()); }
  int cell_count() const { return static_cast<int>(mass.cols()); }

  MassVector phase(int i) const;
  Eigen::VectorXd density(int i) const { return mass.row(i) / cell_volume; }
  /// Reduced per-cell density vector (s_1, ..., s_N) at one cell.
  Eigen::VectorXd reduced_density_at(int cell) const;

  /// Builds a state from per-cell phase fractions (rows sum to 1 per cell):
  /// mass_i(x) = fractions(i, x) * porosity(x) * cell_volume.
  static PhaseField from_fractions(const Grid& grid, const MediumSpec& medium,
                                   const Eigen::MatrixXd& fractions);

  /// max |sum_i mass_i(x) - omega(x) vol| over cells.
  double saturation_drift(const Grid& grid, const MediumSpec& medium) const;
  /// max_i |total_i - m_i|.
  double mass_drift(const MediumSpec& medium) const;

  /// Throws std::invalid_argument unless the state lies in the admissible
  /// set up to tol (relative to total pore volume).
  void validate(const Grid& grid, const MediumSpec& medium, double tol = 1e-9) const;
};

}  // namespace mmflow

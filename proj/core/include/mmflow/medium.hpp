#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "mmflow/grid.hpp"

namespace mmflow {

/// Porous-medium description: porosity, permeability, viscosities,
/// external potentials and the conserved per-phase volumes.
///
/// Permeability is stored either as a scalar field kappa (isotropic mode)
/// or as per-cell symmetric positive-definite tensors (2-D anisotropic mode).
struct MediumSpec {
  int dim = 1;
  int phase_count = 1;  // N + 1

  Eigen::VectorXd porosity;  // omega(x), one entry per cell
  double omega_lo = 0.0, omega_hi = 0.0;

  bool isotropic = true;
  Eigen::VectorXd kappa;                  // isotropic permeability per cell
  std::vector<Eigen::Matrix2d> tensors;   // anisotropic 2-D permeability
  double kappa_lo = 0.0, kappa_hi = 0.0;  // uniform ellipticity bounds

  std::vector<double> viscosity;  // mu_i > 0
  Eigen::MatrixXd psi;            // (N+1) x cells external potentials
  std::vector<double> mass;       // m_i, sums to the pore volume exactly

  int cell_count() const { return static_cast<int>(porosity.size()); }
  double pore_volume(const Grid& grid) const { return porosity.sum() * grid.cell_volume; }
  Eigen::Matrix2d tensor_at(int cell) const;
  /// K evaluated at an edge midpoint: arithmetic mean of the two cell tensors.
  Eigen::Matrix2d tensor_mid(int a, int b) const;

  /// Assigns m_i = fraction_i * pore volume and forces the sum to match the
  /// pore volume exactly (the last phase absorbs the rounding).
  void set_masses_from_fractions(const Grid& grid, const std::vector<double>& fractions);

  /// Checks all structural invariants; throws std::invalid_argument on failure.
  void validate(const Grid& grid) const;
};

/// Builds one of the named analytic presets.
///  - "uniform":        constant porosity/permeability, no external potential
///  - "gravity_column": constant medium with Psi_i = rho_i * g * height
///  - "layered":        piecewise-constant permeability bands along x
MediumSpec make_preset_medium(const std::string& name, const Grid& grid, int phase_count,
                              const std::vector<double>& viscosity,
                              const std::vector<double>& density, double gravity,
                              double omega_value = 0.3, double kappa_value = 1.0);

/// Loads medium fields from CSV rows:
///   cell_index, x, [y,] omega, kappa | kxx,kxy,kyy, psi_0..psi_N
MediumSpec load_medium_csv(const std::string& path, const Grid& grid, int phase_count,
                           const std::vector<double>& viscosity, bool anisotropic = false);

}  // namespace mmflow

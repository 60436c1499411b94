#pragma once

#include <Eigen/Dense>
#include <memory>
#include <stdexcept>
#include <vector>

#include "mmflow/field.hpp"
#include "mmflow/grid.hpp"
#include "mmflow/medium.hpp"

namespace mmflow {

/// Raised when a state violates the saturation/positivity constraints, i.e.
/// where the extended capillary energy takes the value +infinity.
class InfiniteEnergyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Capillary model plug-in: the energy density Pi(s*, x), its gradient
/// pi(s*, x) (the capillary pressures) and the inverse map phi(z, x),
/// together with uniform convexity constants.
///
/// s* denotes the reduced density vector (s_1, ..., s_N); the convention
/// pi_0 = 0 for the reference phase is applied by the callers.
class CapillaryLaw {
 public:
  virtual ~CapillaryLaw() = default;
  virtual int reduced_phase_count() const = 0;  // N
  virtual double potential(int cell, const Eigen::VectorXd& s_star) const = 0;
  virtual Eigen::VectorXd pressure(int cell, const Eigen::VectorXd& s_star) const = 0;
  virtual Eigen::VectorXd inverse(int cell, const Eigen::VectorXd& z) const = 0;
  virtual double convexity_lower() const = 0;  // varpi_*
  virtual double convexity_upper() const = 0;  // varpi^*
};

/// Cellwise quadratic model Pi(s*, x) = 1/2 s*.A(x) s* + b(x).s* with A(x)
/// symmetric positive definite. pressure = A s* + b, inverse = A^-1 (z - b).
class QuadraticCapillaryLaw final : public CapillaryLaw {
 public:
  QuadraticCapillaryLaw(std::vector<Eigen::MatrixXd> A, std::vector<Eigen::VectorXd> b);
  /// Uniform A = a * I_N, b = 0 on every cell.
  static QuadraticCapillaryLaw uniform(int cells, int reduced_phases, double a);

  int reduced_phase_count() const override { return n_; }
  double potential(int cell, const Eigen::VectorXd& s_star) const override;
  Eigen::VectorXd pressure(int cell, const Eigen::VectorXd& s_star) const override;
  Eigen::VectorXd inverse(int cell, const Eigen::VectorXd& z) const override;
  double convexity_lower() const override { return varpi_lo_; }
  double convexity_upper() const override { return varpi_hi_; }

  const Eigen::MatrixXd& matrix(int cell) const { return A_[cell]; }
  const Eigen::VectorXd& offset(int cell) const { return b_[cell]; }

 private:
  int n_ = 0;
  std::vector<Eigen::MatrixXd> A_;
  std::vector<Eigen::MatrixXd> A_inv_;
  std::vector<Eigen::VectorXd> b_;
  double varpi_lo_ = 0.0, varpi_hi_ = 0.0;
};

/// pi(s*, x) with a domain check: s* must lie in Delta*(x) up to tol.
Eigen::VectorXd capillary_pi(const CapillaryLaw& law, const MediumSpec& medium, int cell,
                             const Eigen::VectorXd& s_star, double tol = 1e-9);

/// Inverse map phi(z, x). If the result leaves Delta*(x) beyond tol it is
/// reported through *clamped (when provided) after projection onto bounds.
Eigen::VectorXd capillary_phi(const CapillaryLaw& law, const MediumSpec& medium, int cell,
                              const Eigen::VectorXd& z, bool* clamped = nullptr,
                              double tol = 1e-9);

/// Total energy E(s) = sum_cells [Pi(s*, x) + s.Psi(x)] * cell_volume.
/// Throws InfiniteEnergyError when s is outside the admissible set.
double total_energy(const CapillaryLaw& law, const MediumSpec& medium, const Grid& grid,
                    const PhaseField& s, double tol = 1e-9);

/// Relative Boltzmann entropy of one phase with respect to the porosity:
/// H(s) = sum_x density(x) log(density(x)/omega(x)) * cell_volume, with
/// 0 log 0 = 0. Requires 0 <= density <= omega.
double relative_entropy(const MassVector& s, const MediumSpec& medium, const Grid& grid,
                        double tol = 1e-9);

/// Additive constant that makes the energy nonnegative along a run with
/// fixed per-phase masses: shifts Psi_i by its minimum and bounds Pi below
/// by its unconstrained cellwise minimum.
double energy_floor_shift(const CapillaryLaw& law, const MediumSpec& medium, const Grid& grid);

}  // namespace mmflow

#include "mmflow/field.hpp"

#include <cmath>

namespace mmflow {

MassVector MassVector::of(Eigen::VectorXd m) {
  const double total = m.sum();
  return MassVector::of(std::move(m), total);
}

MassVector MassVector::of(Eigen::VectorXd m, double declared_total) {
  MassVector v;
  v.total = declared_total;
  const double floor = -1e-12 * std::max(1.0, std::abs(declared_total));
  for (int i = 0; i < m.size(); ++i) {
    if (m[i] < floor) throw std::invalid_argument("MassVector: negative entry");
    if (m[i] < 0.0) m[i] = 0.0;
  }
  if (std::abs(m.sum() - declared_total) > 1e-12 * std::max(1.0, std::abs(declared_total))) {
    throw std::invalid_argument("MassVector: sum does not match declared total");
  }
  v.mass = std::move(m);
  return v;
}

MassVector PhaseField::phase(int i) const { return MassVector::of(mass.row(i).transpose()); }

Eigen::VectorXd PhaseField::reduced_density_at(int cell) const {
  const int N = phase_count() - 1;
  Eigen::VectorXd s(N);
  for (int i = 1; i <= N; ++i) s[i - 1] = mass(i, cell) / cell_volume;
  return s;
}

PhaseField PhaseField::from_fractions(const Grid& grid, const MediumSpec& medium,
                                      const Eigen::MatrixXd& fractions) {
  if (fractions.rows() != medium.phase_count || fractions.cols() != grid.cell_count()) {
    throw std::invalid_argument("from_fractions: shape mismatch");
  }
  PhaseField f;
  f.cell_volume = grid.cell_volume;
  f.mass.resize(fractions.rows(), fractions.cols());
  for (int c = 0; c < fractions.cols(); ++c) {
    const double colsum = fractions.col(c).sum();
    if (std::abs(colsum - 1.0) > 1e-10 || fractions.col(c).minCoeff() < -1e-14) {
      throw std::invalid_argument("from_fractions: fractions must be a per-cell simplex");
    }
    const double budget = medium.porosity[c] * grid.cell_volume;
    double acc = 0.0;
    for (int i = 0; i + 1 < fractions.rows(); ++i) {
      f.mass(i, c) = fractions(i, c) * budget;
      acc += f.mass(i, c);
    }
    f.mass(fractions.rows() - 1, c) = budget - acc;  // exact saturation
  }
  return f;
}

double PhaseField::saturation_drift(const Grid& grid, const MediumSpec& medium) const {
  double drift = 0.0;
  for (int c = 0; c < cell_count(); ++c) {
    drift = std::max(drift, std::abs(mass.col(c).sum() - medium.porosity[c] * grid.cell_volume));
  }
  return drift;
}

double PhaseField::mass_drift(const MediumSpec& medium) const {
  double drift = 0.0;
  for (int i = 0; i < phase_count(); ++i) {
    drift = std::max(drift, std::abs(mass.row(i).sum() - medium.mass[i]));
  }
  return drift;
}

void PhaseField::validate(const Grid& grid, const MediumSpec& medium, double tol) const {
  if (phase_count() != medium.phase_count || cell_count() != grid.cell_count()) {
    throw std::invalid_argument("PhaseField: shape mismatch");
  }
  const double pore = medium.pore_volume(grid);
  if (mass.minCoeff() < -tol * pore) {
    throw std::invalid_argument("PhaseField: negative phase mass");
  }
  if (saturation_drift(grid, medium) > tol * pore) {
    throw std::invalid_argument("PhaseField: saturation constraint violated");
  }
  if (static_cast<int>(medium.mass.size()) == phase_count() && mass_drift(medium) > tol * pore) {
    throw std::invalid_argument("PhaseField: per-phase mass constraint violated");
  }
}

}  // namespace mmflow

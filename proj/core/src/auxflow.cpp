#include "mmflow/auxflow.hpp"

#include <Eigen/Sparse>
#include <cmath>
#include <stdexcept>

namespace mmflow {

namespace {

// Face conductances for the u = s/omega form: T = K_face * omega_face *
// area / dist, with harmonic K across the face and arithmetic omega.
std::vector<double> face_conductance(const Grid& grid, const MediumSpec& medium) {
  std::vector<double> T(grid.faces.size());
  for (size_t e = 0; e < grid.faces.size(); ++e) {
    const auto& f = grid.faces[e];
    Eigen::Vector2d dir = Eigen::Vector2d::Zero();
    dir[f.axis] = 1.0;
    const double ka = dir.dot(medium.tensor_at(f.a) * dir);
    const double kb = dir.dot(medium.tensor_at(f.b) * dir);
    const double k_face = 2.0 * ka * kb / (ka + kb);
    const double w_face = 0.5 * (medium.porosity[f.a] + medium.porosity[f.b]);
    T[e] = k_face * w_face * f.area / f.dist;
  }
  return T;
}

}  // namespace

Eigen::VectorXd aux_step(const Eigen::VectorXd& mass, const Grid& grid, const MediumSpec& medium,
                         double delta, int substeps) {
  const int n = grid.cell_count();
  if (mass.size() != n) throw std::invalid_argument("aux_step: size mismatch");
  if (delta < 0.0 || substeps < 1) throw std::invalid_argument("aux_step: bad time parameters");
  if (mass.minCoeff() < -1e-12 * std::max(1.0, mass.cwiseAbs().maxCoeff())) {
    throw std::invalid_argument("aux_step: negative mass");
  }
  if (delta == 0.0) return mass;

  const auto T = face_conductance(grid, medium);
  const double dt = delta / substeps;

  // Implicit system on cell masses: (I - dt M) s+ = s with
  // M_ab = T_ab / (omega_b * vol), M_aa = -sum_b T_ab / (omega_a * vol).
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(2 * grid.faces.size() + n);
  Eigen::VectorXd diag = Eigen::VectorXd::Ones(n);
  for (size_t e = 0; e < grid.faces.size(); ++e) {
    const auto& f = grid.faces[e];
    const double ta = dt * T[e] / (medium.porosity[f.a] * grid.cell_volume);
    const double tb = dt * T[e] / (medium.porosity[f.b] * grid.cell_volume);
    diag[f.a] += ta;
    diag[f.b] += tb;
    trip.emplace_back(f.a, f.b, -tb);
    trip.emplace_back(f.b, f.a, -ta);
  }
  for (int c = 0; c < n; ++c) trip.emplace_back(c, c, diag[c]);
  Eigen::SparseMatrix<double> A(n, n);
  A.setFromTriplets(trip.begin(), trip.end());

  Eigen::SparseLU<Eigen::SparseMatrix<double>> solver;
  solver.compute(A);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("aux_step: factorization failed");
  }
  Eigen::VectorXd s = mass;
  for (int k = 0; k < substeps; ++k) {
    s = solver.solve(s);
    if (solver.info() != Eigen::Success) {
      throw std::runtime_error("aux_step: linear solve failed");
    }
    // The M-matrix inverse is nonnegative; clip solver rounding only.
    for (int c = 0; c < n; ++c) {
      if (s[c] < 0.0) s[c] = 0.0;
    }
  }
  return s;
}

RegularizeResult regularize_positive(const PhaseField& s, const Grid& grid,
                                     const MediumSpec& medium, double delta, double floor_rel,
                                     double delta_cap) {
  s.validate(grid, medium);
  RegularizeResult out;
  out.field = s;
  const double floor = floor_rel * medium.omega_lo * grid.cell_volume;
  if (s.mass.minCoeff() >= floor) {
    out.delta_used = 0.0;
    return out;
  }

  double d = delta;
  while (d <= delta_cap) {
    PhaseField flowed = s;
    for (int i = 0; i < s.phase_count(); ++i) {
      flowed.mass.row(i) = aux_step(s.mass.row(i).transpose(), grid, medium, d).transpose();
    }
    if (flowed.mass.minCoeff() >= floor) {
      out.field = std::move(flowed);
      out.delta_used = d;
      return out;
    }
    d *= 2.0;
  }
  throw std::runtime_error("regularize_positive: floor unreachable within delta cap");
}

}  // namespace mmflow

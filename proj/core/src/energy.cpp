#include "mmflow/energy.hpp"

#include <cmath>

namespace mmflow {

QuadraticCapillaryLaw::QuadraticCapillaryLaw(std::vector<Eigen::MatrixXd> A,
                                             std::vector<Eigen::VectorXd> b)
    : A_(std::move(A)), b_(std::move(b)) {
  if (A_.empty() || A_.size() != b_.size()) {
    throw std::invalid_argument("QuadraticCapillaryLaw: need one (A, b) pair per cell");
  }
  n_ = static_cast<int>(A_[0].rows());
  varpi_lo_ = std::numeric_limits<double>::infinity();
  varpi_hi_ = 0.0;
  A_inv_.reserve(A_.size());
  for (size_t c = 0; c < A_.size(); ++c) {
    const auto& A = A_[c];
    if (A.rows() != n_ || A.cols() != n_ || b_[c].size() != n_) {
      throw std::invalid_argument("QuadraticCapillaryLaw: inconsistent shapes");
    }
    if (n_ > 0) {
      if (!A.isApprox(A.transpose(), 1e-12)) {
        throw std::invalid_argument("QuadraticCapillaryLaw: A must be symmetric");
      }
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
      const double lo = es.eigenvalues().minCoeff();
      if (!(lo > 0.0)) throw std::invalid_argument("QuadraticCapillaryLaw: A must be SPD");
      varpi_lo_ = std::min(varpi_lo_, lo);
      varpi_hi_ = std::max(varpi_hi_, es.eigenvalues().maxCoeff());
      A_inv_.push_back(A.inverse());
    } else {
      A_inv_.push_back(A);
    }
  }
  if (n_ == 0) {
    varpi_lo_ = varpi_hi_ = 1.0;  // single phase: no capillary relations
  }
}

QuadraticCapillaryLaw QuadraticCapillaryLaw::uniform(int cells, int reduced_phases, double a) {
  if (reduced_phases > 0 && !(a > 0.0)) {
    throw std::invalid_argument("QuadraticCapillaryLaw::uniform: a must be positive");
  }
  std::vector<Eigen::MatrixXd> A(cells, a * Eigen::MatrixXd::Identity(reduced_phases, reduced_phases));
  std::vector<Eigen::VectorXd> b(cells, Eigen::VectorXd::Zero(reduced_phases));
  return QuadraticCapillaryLaw(std::move(A), std::move(b));
}

double QuadraticCapillaryLaw::potential(int cell, const Eigen::VectorXd& s_star) const {
  if (n_ == 0) return 0.0;
  return 0.5 * s_star.dot(A_[cell] * s_star) + b_[cell].dot(s_star);
}

Eigen::VectorXd QuadraticCapillaryLaw::pressure(int cell, const Eigen::VectorXd& s_star) const {
  if (n_ == 0) return Eigen::VectorXd();
  return A_[cell] * s_star + b_[cell];
}

Eigen::VectorXd QuadraticCapillaryLaw::inverse(int cell, const Eigen::VectorXd& z) const {
  if (n_ == 0) return Eigen::VectorXd();
  return A_inv_[cell] * (z - b_[cell]);
}

namespace {

void check_in_simplex(const MediumSpec& medium, int cell, const Eigen::VectorXd& s_star,
                      double tol) {
  const double w = medium.porosity[cell];
  if (s_star.size() > 0 && s_star.minCoeff() < -tol * w) {
    throw std::invalid_argument("capillary: s* has a negative component");
  }
  if (s_star.sum() > w * (1.0 + tol)) {
    throw std::invalid_argument("capillary: s* exceeds the porosity budget");
  }
}

}  // namespace

Eigen::VectorXd capillary_pi(const CapillaryLaw& law, const MediumSpec& medium, int cell,
                             const Eigen::VectorXd& s_star, double tol) {
  if (s_star.size() != law.reduced_phase_count()) {
    throw std::invalid_argument("capillary_pi: s* has wrong dimension");
  }
  check_in_simplex(medium, cell, s_star, tol);
  return law.pressure(cell, s_star);
}

Eigen::VectorXd capillary_phi(const CapillaryLaw& law, const MediumSpec& medium, int cell,
                              const Eigen::VectorXd& z, bool* clamped, double tol) {
  if (z.size() != law.reduced_phase_count()) {
    throw std::invalid_argument("capillary_phi: z has wrong dimension");
  }
  Eigen::VectorXd s = law.inverse(cell, z);
  bool out = false;
  const double w = medium.porosity[cell];
  for (int i = 0; i < s.size(); ++i) {
    if (s[i] < -tol * w) out = true;
    if (s[i] < 0.0) s[i] = 0.0;
  }
  const double sum = s.sum();
  if (sum > w * (1.0 + tol)) {
    out = true;
    s *= w / sum;
  }
  if (clamped) *clamped = out;
  return s;
}

double total_energy(const CapillaryLaw& law, const MediumSpec& medium, const Grid& grid,
                    const PhaseField& s, double tol) {
  if (s.phase_count() != medium.phase_count || s.cell_count() != grid.cell_count()) {
    throw std::invalid_argument("total_energy: shape mismatch");
  }
  const double pore = medium.pore_volume(grid);
  if (s.mass.minCoeff() < -tol * pore) {
    throw InfiniteEnergyError("total_energy: negative phase mass");
  }
  if (s.saturation_drift(grid, medium) > tol * pore) {
    throw InfiniteEnergyError("total_energy: saturation constraint violated");
  }
  double e = 0.0;
  for (int c = 0; c < s.cell_count(); ++c) {
    e += law.potential(c, s.reduced_density_at(c)) * grid.cell_volume;
    for (int i = 0; i < s.phase_count(); ++i) e += s.mass(i, c) * medium.psi(i, c);
  }
  return e;
}

double relative_entropy(const MassVector& s, const MediumSpec& medium, const Grid& grid,
                        double tol) {
  if (s.size() != grid.cell_count()) {
    throw std::invalid_argument("relative_entropy: size mismatch");
  }
  double h = 0.0;
  for (int c = 0; c < s.size(); ++c) {
    const double dens = s.mass[c] / grid.cell_volume;
    const double w = medium.porosity[c];
    if (dens < -tol * w) throw std::invalid_argument("relative_entropy: negative density");
    if (dens > w * (1.0 + tol)) {
      throw std::invalid_argument("relative_entropy: density exceeds porosity");
    }
    if (dens > 0.0) h += dens * std::log(std::min(dens, w) / w) * grid.cell_volume;
  }
  return h;
}

double energy_floor_shift(const CapillaryLaw& law, const MediumSpec& medium, const Grid& grid) {
  double shift = 0.0;
  for (int i = 0; i < medium.phase_count; ++i) {
    shift -= medium.psi.row(i).minCoeff() * medium.mass[i];
  }
  // Lower bound on Pi over the simplex: the unconstrained minimum of the
  // quadratic (0 for models with potential >= 0 everywhere).
  const auto* quad = dynamic_cast<const QuadraticCapillaryLaw*>(&law);
  if (quad && law.reduced_phase_count() > 0) {
    double floor = 0.0;
    for (int c = 0; c < grid.cell_count(); ++c) {
      const Eigen::VectorXd b = quad->offset(c);
      if (b.squaredNorm() > 0.0) {
        const Eigen::VectorXd s0 = quad->matrix(c).ldlt().solve(-b);
        floor = std::min(floor, 0.5 * s0.dot(quad->matrix(c) * s0) + b.dot(s0));
      }
    }
    shift -= floor * grid.cell_volume * grid.cell_count();
  }
  return shift;
}

}  // namespace mmflow

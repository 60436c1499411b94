#include "mmflow/medium.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace mmflow {

Eigen::Matrix2d MediumSpec::tensor_at(int cell) const {
  if (isotropic) {
    return kappa[cell] * Eigen::Matrix2d::Identity();
  }
  return tensors[cell];
}

Eigen::Matrix2d MediumSpec::tensor_mid(int a, int b) const {
  return 0.5 * (tensor_at(a) + tensor_at(b));
}

void MediumSpec::set_masses_from_fractions(const Grid& grid, const std::vector<double>& fractions) {
  if (static_cast<int>(fractions.size()) != phase_count) {
    throw std::invalid_argument("set_masses_from_fractions: need one fraction per phase");
  }
  double fsum = 0.0;
  for (double f : fractions) {
    if (f < 0.0) throw std::invalid_argument("set_masses_from_fractions: negative fraction");
    fsum += f;
  }
  if (std::abs(fsum - 1.0) > 1e-12) {
    throw std::invalid_argument("set_masses_from_fractions: fractions must sum to 1");
  }
  const double pore = pore_volume(grid);
  mass.assign(phase_count, 0.0);
  double acc = 0.0;
  for (int i = 0; i + 1 < phase_count; ++i) {
    mass[i] = fractions[i] * pore;
    acc += mass[i];
  }
  mass[phase_count - 1] = pore - acc;
}

void MediumSpec::validate(const Grid& grid) const {
  const int n = grid.cell_count();
  if (porosity.size() != n) throw std::invalid_argument("medium: porosity size mismatch");
  if (phase_count < 1) throw std::invalid_argument("medium: need at least one phase");
  if (static_cast<int>(viscosity.size()) != phase_count) {
    throw std::invalid_argument("medium: need one viscosity per phase");
  }
  for (double mu : viscosity) {
    if (!(mu > 0.0)) throw std::invalid_argument("medium: viscosities must be positive");
  }
  if (psi.rows() != phase_count || psi.cols() != n) {
    throw std::invalid_argument("medium: psi must be (N+1) x cells");
  }
  if (!psi.allFinite()) throw std::invalid_argument("medium: psi must be finite");
  if (!(omega_lo > 0.0) || !(omega_hi < 1.0) || omega_lo > omega_hi) {
    throw std::invalid_argument("medium: need 0 < omega_lo <= omega_hi < 1");
  }
  for (int c = 0; c < n; ++c) {
    const double w = porosity[c];
    if (!(w >= omega_lo && w <= omega_hi)) {
      throw std::invalid_argument("medium: porosity outside [omega_lo, omega_hi]");
    }
  }
  if (!(kappa_lo > 0.0) || kappa_lo > kappa_hi) {
    throw std::invalid_argument("medium: need 0 < kappa_lo <= kappa_hi");
  }
  if (isotropic) {
    if (kappa.size() != n) throw std::invalid_argument("medium: kappa size mismatch");
    for (int c = 0; c < n; ++c) {
      if (!(kappa[c] >= kappa_lo && kappa[c] <= kappa_hi)) {
        throw std::invalid_argument("medium: kappa outside [kappa_lo, kappa_hi]");
      }
    }
  } else {
    if (static_cast<int>(tensors.size()) != n) {
      throw std::invalid_argument("medium: tensor count mismatch");
    }
    for (const auto& K : tensors) {
      if (std::abs(K(0, 1) - K(1, 0)) > 1e-14 * (1.0 + K.norm())) {
        throw std::invalid_argument("medium: permeability tensor not symmetric");
      }
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(K);
      const double lo = es.eigenvalues().minCoeff();
      const double hi = es.eigenvalues().maxCoeff();
      if (!(lo >= kappa_lo * (1.0 - 1e-12) && hi <= kappa_hi * (1.0 + 1e-12)) || !(lo > 0.0)) {
        throw std::invalid_argument("medium: tensor violates ellipticity bounds");
      }
    }
  }
  if (static_cast<int>(mass.size()) == phase_count) {
    double msum = 0.0;
    for (double m : mass) {
      if (!(m > 0.0)) throw std::invalid_argument("medium: phase masses must be positive");
      msum += m;
    }
    const double pore = pore_volume(grid);
    if (std::abs(msum - pore) > 1e-10 * pore) {
      throw std::invalid_argument("medium: sum of masses must equal the pore volume");
    }
  }
}

MediumSpec make_preset_medium(const std::string& name, const Grid& grid, int phase_count,
                              const std::vector<double>& viscosity,
                              const std::vector<double>& density, double gravity,
                              double omega_value, double kappa_value) {
  const int n = grid.cell_count();
  MediumSpec m;
  m.dim = grid.dim;
  m.phase_count = phase_count;
  m.viscosity = viscosity;
  m.porosity = Eigen::VectorXd::Constant(n, omega_value);
  m.omega_lo = omega_value;
  m.omega_hi = omega_value;
  m.isotropic = true;
  m.kappa = Eigen::VectorXd::Constant(n, kappa_value);
  m.kappa_lo = kappa_value;
  m.kappa_hi = kappa_value;
  m.psi = Eigen::MatrixXd::Zero(phase_count, n);

  if (name == "uniform") {
    // nothing else to do
  } else if (name == "gravity_column") {
    if (static_cast<int>(density.size()) != phase_count) {
      throw std::invalid_argument("gravity_column: need one density per phase");
    }
    // Height coordinate: x in 1-D, y in 2-D. Psi_i = rho_i * g * height.
    for (int c = 0; c < n; ++c) {
      const double height = grid.dim == 2 ? grid.cell_centers[c][1] : grid.cell_centers[c][0];
      for (int i = 0; i < phase_count; ++i) {
        m.psi(i, c) = density[i] * gravity * height;
      }
    }
  } else if (name == "layered") {
    // Permeability alternating between kappa_value and 4*kappa_value in
    // thirds along x; porosity unchanged.
    for (int c = 0; c < n; ++c) {
      const double x = grid.cell_centers[c][0];
      const double x0 = grid.origin[0];
      const double span = grid.nx * grid.hx;
      const double rel = (x - x0) / span;
      m.kappa[c] = (rel > 1.0 / 3.0 && rel < 2.0 / 3.0) ? 4.0 * kappa_value : kappa_value;
    }
    m.kappa_lo = kappa_value;
    m.kappa_hi = 4.0 * kappa_value;
    if (static_cast<int>(density.size()) == phase_count && gravity != 0.0) {
      for (int c = 0; c < n; ++c) {
        const double height = grid.dim == 2 ? grid.cell_centers[c][1] : grid.cell_centers[c][0];
        for (int i = 0; i < phase_count; ++i) m.psi(i, c) = density[i] * gravity * height;
      }
    }
  } else {
    throw std::invalid_argument("unknown medium preset: " + name);
  }
  return m;
}

namespace {

std::vector<double> split_row(const std::string& line) {
  std::vector<double> out;
  std::stringstream ss(line);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    out.push_back(std::stod(tok));
  }
  return out;
}

}  // namespace

MediumSpec load_medium_csv(const std::string& path, const Grid& grid, int phase_count,
                           const std::vector<double>& viscosity, bool anisotropic) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open medium file: " + path);
  const int n = grid.cell_count();

  MediumSpec m;
  m.dim = grid.dim;
  m.phase_count = phase_count;
  m.viscosity = viscosity;
  m.porosity = Eigen::VectorXd::Zero(n);
  m.isotropic = !anisotropic;
  if (m.isotropic) {
    m.kappa = Eigen::VectorXd::Zero(n);
  } else {
    m.tensors.assign(n, Eigen::Matrix2d::Identity());
  }
  m.psi = Eigen::MatrixXd::Zero(phase_count, n);

  std::vector<bool> seen(n, false);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto row = split_row(line);
    const int coord_cols = grid.dim;
    const int perm_cols = anisotropic ? 3 : 1;
    const size_t expected = 1 + coord_cols + 1 + perm_cols + phase_count;
    if (row.size() != expected) {
      throw std::runtime_error("medium csv: wrong column count in row: " + line);
    }
    const int cell = static_cast<int>(row[0]);
    if (cell < 0 || cell >= n) throw std::runtime_error("medium csv: cell index out of range");
    size_t k = 1 + coord_cols;
    m.porosity[cell] = row[k++];
    if (anisotropic) {
      Eigen::Matrix2d K;
      K(0, 0) = row[k];
      K(0, 1) = K(1, 0) = row[k + 1];
      K(1, 1) = row[k + 2];
      k += 3;
      m.tensors[cell] = K;
    } else {
      m.kappa[cell] = row[k++];
    }
    for (int i = 0; i < phase_count; ++i) m.psi(i, cell) = row[k++];
    seen[cell] = true;
  }
  for (int c = 0; c < n; ++c) {
    if (!seen[c]) throw std::runtime_error("medium csv: missing cell " + std::to_string(c));
  }

  m.omega_lo = m.porosity.minCoeff();
  m.omega_hi = m.porosity.maxCoeff();
  if (m.isotropic) {
    m.kappa_lo = m.kappa.minCoeff();
    m.kappa_hi = m.kappa.maxCoeff();
  } else {
    m.kappa_lo = std::numeric_limits<double>::infinity();
    m.kappa_hi = 0.0;
    for (const auto& K : m.tensors) {
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(K);
      m.kappa_lo = std::min(m.kappa_lo, es.eigenvalues().minCoeff());
      m.kappa_hi = std::max(m.kappa_hi, es.eigenvalues().maxCoeff());
    }
  }
  return m;
}

}  // namespace mmflow

#include <doctest.h>

#include <random>

#include "mmflow/energy.hpp"
#include "support/fixtures.hpp"

using namespace mmflow;

namespace {

Grid unit_cell_grid() {
  GridConfig gc;
  gc.dim = 1;
  gc.nx = 1;
  return build_grid(gc);  // one cell, volume 1
}

MediumSpec unit_medium(const Grid& g, int phases, double omega = 1.0) {
  MediumSpec m;
  m.dim = 1;
  m.phase_count = phases;
  m.porosity = Eigen::VectorXd::Constant(g.cell_count(), omega);
  m.omega_lo = m.omega_hi = omega;
  m.isotropic = true;
  m.kappa = Eigen::VectorXd::Ones(g.cell_count());
  m.kappa_lo = m.kappa_hi = 1.0;
  m.viscosity.assign(phases, 1.0);
  m.psi = Eigen::MatrixXd::Zero(phases, g.cell_count());
  return m;
}

}  // namespace

TEST_CASE("capillary_pi: linear map examples") {
  const Grid g = unit_cell_grid();
  const MediumSpec m = unit_medium(g, 2);
  const auto law = QuadraticCapillaryLaw::uniform(1, 1, 1.0);

  Eigen::VectorXd s(1);
  s << 0.5;
  CHECK(capillary_pi(law, m, 0, s)[0] == doctest::Approx(0.5));
  s << 0.0;
  CHECK(capillary_pi(law, m, 0, s)[0] == doctest::Approx(0.0));  // b = 0

  Eigen::VectorXd bad(1);
  bad << 1.5;  // above the porosity budget
  CHECK_THROWS_AS(capillary_pi(law, m, 0, bad), std::invalid_argument);
}

TEST_CASE("capillary pi/phi are inverse to each other on random SPD models") {
  std::mt19937 rng(13);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  const int N = 3;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(N, N);
  for (int i = 0; i < N; ++i) {
    for (int j = 0; j < N; ++j) A(i, j) = u(rng);
  }
  A = (A * A.transpose() + Eigen::MatrixXd::Identity(N, N)).eval();  // SPD
  Eigen::VectorXd b(N);
  for (int i = 0; i < N; ++i) b[i] = u(rng);

  const Grid g = unit_cell_grid();
  const MediumSpec m = unit_medium(g, N + 1);
  QuadraticCapillaryLaw law({A}, {b});

  for (int t = 0; t < 20; ++t) {
    Eigen::VectorXd s(N);
    for (int i = 0; i < N; ++i) s[i] = std::abs(u(rng)) / N;
    const Eigen::VectorXd z = capillary_pi(law, m, 0, s);
    bool clamped = false;
    const Eigen::VectorXd back = capillary_phi(law, m, 0, z, &clamped);
    CHECK((back - s).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK_FALSE(clamped);
  }
}

TEST_CASE("total_energy: half-square example") {
  const Grid g = unit_cell_grid();
  const MediumSpec m = unit_medium(g, 2);
  const auto law = QuadraticCapillaryLaw::uniform(1, 1, 1.0);
  PhaseField s;
  s.cell_volume = 1.0;
  s.mass.resize(2, 1);
  s.mass << 0.5, 0.5;  // phase 0 = 0.5, phase 1 (reduced) = 0.5
  CHECK(total_energy(law, m, g, s) == doctest::Approx(0.125));
}

TEST_CASE("total_energy: zero state and infinite branch") {
  const Grid g = unit_cell_grid();
  const MediumSpec m = unit_medium(g, 2);
  const auto law = QuadraticCapillaryLaw::uniform(1, 1, 1.0);
  PhaseField s;
  s.cell_volume = 1.0;
  s.mass.resize(2, 1);
  s.mass << 1.0, 0.0;  // s* = 0
  CHECK(total_energy(law, m, g, s) == doctest::Approx(0.0));

  s.mass << 1.0, 0.5;  // saturation violated
  CHECK_THROWS_AS(total_energy(law, m, g, s), InfiniteEnergyError);
  s.mass << 1.4, -0.4;  // negative phase
  CHECK_THROWS_AS(total_energy(law, m, g, s), InfiniteEnergyError);
}

TEST_CASE("total_energy agrees with direct re-summation on a gravity column") {
  auto col = mmtest::gravity_column(12);
  const double e = total_energy(col.law, col.medium, col.grid, col.s0);
  double direct = 0.0;
  for (int c = 0; c < col.grid.cell_count(); ++c) {
    const Eigen::VectorXd s_star = col.s0.reduced_density_at(c);
    direct += (0.5 * s_star.dot(col.law.matrix(c) * s_star) +
               col.law.offset(c).dot(s_star)) * col.grid.cell_volume;
    for (int i = 0; i < 2; ++i) direct += col.s0.mass(i, c) * col.medium.psi(i, c);
  }
  CHECK(e == doctest::Approx(direct).epsilon(1e-12));
}

TEST_CASE("relative_entropy: exact values and the bracket") {
  const Grid g = unit_cell_grid();
  const MediumSpec m = unit_medium(g, 1);

  Eigen::VectorXd full(1);
  full << 1.0;  // density = omega = 1
  CHECK(relative_entropy(MassVector::of(full), m, g) == doctest::Approx(0.0));

  Eigen::VectorXd e_inv(1);
  e_inv << 1.0 / std::numbers::e;
  CHECK(relative_entropy(MassVector::of(e_inv), m, g) ==
        doctest::Approx(-1.0 / std::numbers::e).epsilon(1e-12));

  Eigen::VectorXd over(1);
  over << 1.5;
  CHECK_THROWS_AS(relative_entropy(MassVector::of(over), m, g), std::invalid_argument);

  // Random admissible vectors stay in [-|omega|_L1 / e, 0].
  GridConfig gc;
  gc.dim = 1;
  gc.nx = 16;
  const Grid g16 = build_grid(gc);
  const MediumSpec m16 = unit_medium(g16, 1, 0.4);
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(0.0, 0.4);
  const double omega_l1 = m16.porosity.sum() * g16.cell_volume;
  for (int t = 0; t < 50; ++t) {
    Eigen::VectorXd v(16);
    for (int c = 0; c < 16; ++c) v[c] = u(rng) * g16.cell_volume;
    const double h = relative_entropy(MassVector::of(v), m16, g16);
    CHECK(h <= 1e-14);
    CHECK(h >= -omega_l1 / std::numbers::e - 1e-14);
  }
}

TEST_CASE("uniform convexity bracket of the quadratic model") {
  std::mt19937 rng(19);
  std::uniform_real_distribution<double> u(0.0, 0.45);
  const Grid g = unit_cell_grid();
  const MediumSpec m = unit_medium(g, 3);

  Eigen::MatrixXd A(2, 2);
  A << 2.0, 0.3, 0.3, 1.0;
  QuadraticCapillaryLaw law({A}, {Eigen::VectorXd::Zero(2)});
  const double lo = law.convexity_lower();
  const double hi = law.convexity_upper();
  CHECK(lo > 0.0);

  for (int t = 0; t < 100; ++t) {
    Eigen::VectorXd s(2), sh(2);
    s << u(rng), u(rng);
    sh << u(rng), u(rng);
    const double gap = law.potential(0, sh) - law.potential(0, s) -
                       law.pressure(0, s).dot(sh - s);
    const double d2 = (sh - s).squaredNorm();
    CHECK(gap >= 0.5 * lo * d2 - 1e-12);
    CHECK(gap <= 0.5 * hi * d2 + 1e-12);
  }

  // Equality when A = c I.
  const auto iso = QuadraticCapillaryLaw::uniform(1, 2, 1.7);
  CHECK(iso.convexity_lower() == doctest::Approx(1.7));
  CHECK(iso.convexity_upper() == doctest::Approx(1.7));
  Eigen::VectorXd s(2), sh(2);
  s << 0.1, 0.2;
  sh << 0.3, 0.05;
  const double gap = iso.potential(0, sh) - iso.potential(0, s) -
                     iso.pressure(0, s).dot(sh - s);
  CHECK(gap == doctest::Approx(0.5 * 1.7 * (sh - s).squaredNorm()).epsilon(1e-12));
}

TEST_CASE("pressure equals the finite-difference gradient of the potential") {
  const Grid g = unit_cell_grid();
  Eigen::MatrixXd A(2, 2);
  A << 1.5, -0.2, -0.2, 0.8;
  Eigen::VectorXd b(2);
  b << 0.1, -0.3;
  QuadraticCapillaryLaw law({A}, {b});
  Eigen::VectorXd s(2);
  s << 0.2, 0.3;
  const double h = 1e-6;
  const Eigen::VectorXd pi = law.pressure(0, s);
  for (int i = 0; i < 2; ++i) {
    Eigen::VectorXd sp = s, sm = s;
    sp[i] += h;
    sm[i] -= h;
    const double fd = (law.potential(0, sp) - law.potential(0, sm)) / (2.0 * h);
    CHECK(pi[i] == doctest::Approx(fd).epsilon(1e-8));
  }
}

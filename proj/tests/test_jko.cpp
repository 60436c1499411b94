#include <doctest.h>

#include <random>

#include "mmflow/jko.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace mmflow;

TEST_CASE("assemble_F: stationary state reduces to pi + Psi (exact mode)") {
  auto col = mmtest::gravity_column(8);
  std::vector<TransportResult> transports;
  for (int i = 0; i < 2; ++i) {
    transports.push_back(exact_w2(col.bundle.csq[i], col.s0.phase(i), col.s0.phase(i)));
  }
  const double tau = 0.1;
  const Eigen::MatrixXd F = assemble_F(col.s0, tau, transports, col.law, col.medium);
  for (int c = 0; c < col.grid.cell_count(); ++c) {
    const Eigen::VectorXd pi = col.law.pressure(c, col.s0.reduced_density_at(c));
    CHECK(F(0, c) == doctest::Approx(col.medium.psi(0, c)).epsilon(1e-13));
    CHECK(F(1, c) == doctest::Approx(pi[0] + col.medium.psi(1, c)).epsilon(1e-13));
  }
}

TEST_CASE("assemble_F: with capillarity and gravity off, F is the potential term") {
  const int n = 6;
  GridConfig gc;
  gc.dim = 1;
  gc.nx = n;
  const Grid grid = build_grid(gc);
  MediumSpec medium = make_preset_medium("uniform", grid, 2, {1.0, 1.0}, {}, 0.0);
  Eigen::MatrixXd fr(2, n);
  for (int c = 0; c < n; ++c) {
    fr(0, c) = c < n / 2 ? 0.8 : 0.2;
    fr(1, c) = 1.0 - fr(0, c);
  }
  const PhaseField a = PhaseField::from_fractions(grid, medium, fr);
  Eigen::MatrixXd fr2 = fr.rowwise().reverse();
  const PhaseField b = PhaseField::from_fractions(grid, medium, fr2);
  medium.mass = {a.mass.row(0).sum(), a.mass.row(1).sum()};
  const CostBundle bundle = build_cost_bundle(grid, medium);

  // A -> 0 is not allowed (SPD); emulate disabled capillarity with a tiny A
  // and compare against phi/tau directly.
  QuadraticCapillaryLaw tiny = QuadraticCapillaryLaw::uniform(n, 1, 1e-14);
  std::vector<TransportResult> transports;
  for (int i = 0; i < 2; ++i) {
    transports.push_back(exact_w2(bundle.csq[i], a.phase(i), b.phase(i)));
  }
  const double tau = 0.25;
  const Eigen::MatrixXd F = assemble_F(a, tau, transports, tiny, medium);
  for (int c = 0; c < n; ++c) {
    for (int i = 0; i < 2; ++i) {
      CHECK(F(i, c) == doctest::Approx(0.5 * transports[i].phi[c] / tau).epsilon(1e-9));
    }
  }
}

TEST_CASE("assemble_F: independent re-summation of the three terms") {
  auto col = mmtest::gravity_column(10);
  std::mt19937 rng(3);
  const PhaseField other = mmtest::random_admissible_state(col.grid, col.medium, rng);
  std::vector<TransportResult> transports;
  for (int i = 0; i < 2; ++i) {
    transports.push_back(exact_w2(col.bundle.csq[i], other.phase(i), col.s0.phase(i)));
  }
  const double tau = 0.05;
  const Eigen::MatrixXd F = assemble_F(other, tau, transports, col.law, col.medium);
  for (int c = 0; c < col.grid.cell_count(); ++c) {
    const Eigen::VectorXd pi = col.law.pressure(c, other.reduced_density_at(c));
    for (int i = 0; i < 2; ++i) {
      const double expected = 0.5 * transports[i].phi[c] / tau +
                              (i == 0 ? 0.0 : pi[i - 1]) + col.medium.psi(i, c);
      CHECK(F(i, c) == doctest::Approx(expected).epsilon(1e-12));
    }
  }
}

TEST_CASE("jko_step: single phase is stationary") {
  GridConfig gc;
  gc.dim = 1;
  gc.nx = 6;
  const Grid grid = build_grid(gc);
  MediumSpec medium = make_preset_medium("uniform", grid, 1, {1.0}, {}, 0.0);
  const auto law = QuadraticCapillaryLaw::uniform(6, 0, 1.0);
  Eigen::MatrixXd fr = Eigen::MatrixXd::Ones(1, 6);
  const PhaseField s0 = PhaseField::from_fractions(grid, medium, fr);
  medium.mass = {s0.mass.sum()};
  const CostBundle bundle = build_cost_bundle(grid, medium);

  JKOOptions opts;
  opts.mode = TransportMode::exact;
  const JKOStepRecord rec = jko_step(s0, 0.1, grid, medium, law, bundle, opts);
  CHECK(rec.converged);
  CHECK((rec.s_new.mass - s0.mass).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(rec.w2[0] <= 1e-12);
}

TEST_CASE("jko_step: pure-distance objective keeps the previous state") {
  const int n = 8;
  GridConfig gc;
  gc.dim = 1;
  gc.nx = n;
  const Grid grid = build_grid(gc);
  MediumSpec medium = make_preset_medium("uniform", grid, 2, {1.0, 1.0}, {}, 0.0);
  const auto law = QuadraticCapillaryLaw::uniform(n, 1, 1e-12);  // Pi ~ 0, Psi = 0
  Eigen::MatrixXd fr(2, n);
  for (int c = 0; c < n; ++c) {
    fr(0, c) = 0.3 + 0.05 * c / n;
    fr(1, c) = 1.0 - fr(0, c);
  }
  const PhaseField s0 = PhaseField::from_fractions(grid, medium, fr);
  medium.mass = {s0.mass.row(0).sum(), s0.mass.row(1).sum()};
  const CostBundle bundle = build_cost_bundle(grid, medium);

  JKOOptions opts;
  opts.mode = TransportMode::exact;
  const JKOStepRecord rec = jko_step(s0, 0.5, grid, medium, law, bundle, opts);
  CHECK(rec.converged);
  CHECK(rec.fw_gap <= opts.fw_tol_rel * (1.0 + std::abs(rec.objective)));
  CHECK((rec.s_new.mass - s0.mass).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("jko_step matches the QP oracle on a small gravity column") {
  auto col = mmtest::gravity_column(8, 0.5, 0.75, 4.0);
  JKOOptions opts;
  opts.mode = TransportMode::exact;
  opts.fw_tol_rel = 1e-8;
  const double tau = 0.1;
  const JKOStepRecord rec = jko_step(col.s0, tau, col.grid, col.medium, col.law, col.bundle, opts);
  CHECK(rec.converged);
  const double oracle = mmtest::jko_objective_oracle(rec.s_prev, tau, col.grid, col.medium,
                                                     col.law, col.bundle);
  CHECK(rec.objective == doctest::Approx(oracle).epsilon(1e-5));
  // The step must strictly decrease the energy here (heavy phase falls).
  CHECK(rec.energy_after < rec.energy_before);
}

TEST_CASE("jko_step: one-step energy inequality and conservation") {
  auto col = mmtest::gravity_column(12);
  JKOOptions opts;
  opts.mode = TransportMode::entropic;
  opts.epsilon_rel = 1e-2;
  const double tau = 0.05;
  const JKOStepRecord rec = jko_step(col.s0, tau, col.grid, col.medium, col.law, col.bundle, opts);
  CHECK(rec.converged);
  double w2 = 0.0;
  for (double v : rec.w2) w2 += v;
  const double slack = rec.fw_gap + 2.0 * (rec.epsilon_used[0] + rec.epsilon_used[1]) *
                                        col.medium.pore_volume(col.grid) * 10.0;
  CHECK(w2 / (2.0 * tau) + rec.energy_after <= rec.energy_before + slack);

  const double pore = col.medium.pore_volume(col.grid);
  CHECK(rec.s_new.saturation_drift(col.grid, col.medium) <= 1e-10 * pore);
  CHECK(rec.s_new.mass_drift(col.medium) <= 1e-10 * pore);
}

TEST_CASE("reconstruct_pressures: identities") {
  auto col = mmtest::gravity_column(10);
  JKOOptions opts;
  opts.mode = TransportMode::exact;
  const double tau = 0.1;
  const JKOStepRecord rec = jko_step(col.s0, tau, col.grid, col.medium, col.law, col.bundle, opts);

  // h_0 has zero mean.
  CHECK(rec.h.row(0).mean() == doctest::Approx(0.0).epsilon(1e-12));

  // p_i - p_0 = pi_i to machine precision; h_i - h_0 = pi_i + Psi_i - Psi_0.
  for (int c = 0; c < col.grid.cell_count(); ++c) {
    const Eigen::VectorXd pi = col.law.pressure(c, rec.s_new.reduced_density_at(c));
    const double res_p = (rec.p(1, c) - rec.p(0, c)) - pi[0];
    CHECK(std::abs(res_p) <= 1e-12 * (1.0 + std::abs(rec.p(1, c))));
    const double res_h = (rec.h(1, c) - rec.h(0, c)) -
                         (pi[0] + col.medium.psi(1, c) - col.medium.psi(0, c));
    CHECK(std::abs(res_h) <= 1e-12 * (1.0 + std::abs(rec.h(1, c))));
  }

  // Prop (i): discrete gradient of h_i matches -grad phi_i / tau on the
  // support, up to a gap-scaled tolerance.
  const double tol = 1e-5 * (1.0 + rec.h.cwiseAbs().maxCoeff()) +
                     10.0 * rec.fw_gap / tau;
  for (int i = 0; i < 2; ++i) {
    for (const auto& face : col.grid.faces) {
      const double sa = rec.s_new.mass(i, face.a);
      const double sb = rec.s_new.mass(i, face.b);
      const double floor = 1e-3 * col.medium.omega_lo * col.grid.cell_volume;
      if (sa < floor || sb < floor) continue;
      const double dh = (rec.h(i, face.b) - rec.h(i, face.a)) / face.dist;
      const double dphi = (rec.phi(i, face.b) - rec.phi(i, face.a)) / face.dist;
      CHECK(dh == doctest::Approx(-dphi / tau).epsilon(0.05).scale(1.0 + std::abs(dh) + tol));
    }
  }
}

TEST_CASE("reconstruct_pressures: stationary step cancellation") {
  auto col = mmtest::gravity_column(6);
  const int n = col.grid.cell_count();
  // phi = 0, F = pi + Psi, lambda arbitrary constant.
  std::vector<TransportResult> transports;
  for (int i = 0; i < 2; ++i) {
    transports.push_back(exact_w2(col.bundle.csq[i], col.s0.phase(i), col.s0.phase(i)));
  }
  const double tau = 0.1;
  const Eigen::MatrixXd F = assemble_F(col.s0, tau, transports, col.law, col.medium);
  Eigen::MatrixXd phi = Eigen::MatrixXd::Zero(2, n);
  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(2);
  Eigen::VectorXd lambda = Eigen::VectorXd::Constant(n, 0.7);
  const PressureFields pf =
      reconstruct_pressures(F, phi, alpha, lambda, col.medium, col.grid, tau);
  for (int c = 0; c < n; ++c) {
    const Eigen::VectorXd pi = col.law.pressure(c, col.s0.reduced_density_at(c));
    CHECK(pf.h(1, c) - pf.h(0, c) ==
          doctest::Approx(pi[0] + col.medium.psi(1, c) - col.medium.psi(0, c)).epsilon(1e-12));
  }
}

TEST_CASE("run_simulation: zero horizon returns no steps") {
  auto col = mmtest::gravity_column(6);
  JKOOptions opts;
  opts.mode = TransportMode::exact;
  const auto records =
      run_simulation(col.s0, 0.1, 0.0, col.grid, col.medium, col.law, col.bundle, opts);
  CHECK(records.empty());
}

TEST_CASE("run_simulation: single phase stays constant") {
  GridConfig gc;
  gc.dim = 1;
  gc.nx = 5;
  const Grid grid = build_grid(gc);
  MediumSpec medium = make_preset_medium("uniform", grid, 1, {1.0}, {}, 0.0);
  const auto law = QuadraticCapillaryLaw::uniform(5, 0, 1.0);
  const PhaseField s0 = PhaseField::from_fractions(grid, medium, Eigen::MatrixXd::Ones(1, 5));
  medium.mass = {s0.mass.sum()};
  const CostBundle bundle = build_cost_bundle(grid, medium);
  JKOOptions opts;
  opts.mode = TransportMode::exact;
  const auto records = run_simulation(s0, 0.1, 0.3, grid, medium, law, bundle, opts);
  CHECK(records.size() == 3);
  for (const auto& rec : records) {
    CHECK((rec.s_new.mass - s0.mass).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("run_simulation: callback sees every step in order") {
  auto col = mmtest::gravity_column(6);
  JKOOptions opts;
  opts.mode = TransportMode::exact;
  std::vector<int> seen;
  run_simulation(col.s0, 0.1, 0.25, col.grid, col.medium, col.law, col.bundle, opts,
                 [&](int n, const JKOStepRecord&) { seen.push_back(n); });
  CHECK(seen == std::vector<int>{1, 2, 3});
}

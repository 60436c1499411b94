#include "mmflow/runner.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace mmflow {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

Eigen::MatrixXd initial_fractions(const RunConfig& config, const Grid& grid) {
  const int P = config.phase_count;
  const int n = grid.cell_count();
  Eigen::MatrixXd f(P, n);

  if (config.init_preset == "uniform_mix") {
    std::vector<double> fr = config.init_fractions;
    if (fr.empty()) fr.assign(P, 1.0 / P);
    if (static_cast<int>(fr.size()) != P) {
      throw std::runtime_error("init.fractions needs one value per phase");
    }
    for (int c = 0; c < n; ++c) {
      for (int i = 0; i < P; ++i) f(i, c) = fr[i];
    }
  } else if (config.init_preset == "heavy_top") {
    if (P < 2) throw std::runtime_error("heavy_top needs at least two phases");
    const int heavy = config.init_heavy_phase;
    if (heavy < 0 || heavy >= P) throw std::runtime_error("init.heavy_phase out of range");
    const double q = config.init_top_fraction;
    if (q < 0.0 || q > 1.0) throw std::runtime_error("init.top_fraction must lie in [0,1]");
    for (int c = 0; c < n; ++c) {
      const double height = grid.dim == 2 ? grid.cell_centers[c][1] : grid.cell_centers[c][0];
      const double mid = grid.dim == 2 ? grid.origin[1] + 0.5 * grid.ny * grid.hy
                                       : grid.origin[0] + 0.5 * grid.nx * grid.hx;
      const double hq = height >= mid ? q : 1.0 - q;
      for (int i = 0; i < P; ++i) {
        f(i, c) = i == heavy ? hq : (1.0 - hq) / (P - 1);
      }
    }
  } else if (config.init_preset == "csv") {
    std::ifstream in(config.init_csv);
    if (!in) throw std::runtime_error("cannot open init csv: " + config.init_csv);
    f.setConstant(-1.0);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') continue;
      std::stringstream ss(line);
      std::string tok;
      std::vector<double> row;
      while (std::getline(ss, tok, ',')) row.push_back(std::stod(tok));
      if (static_cast<int>(row.size()) != P + 1) {
        throw std::runtime_error("init csv: expected cell,f_0..f_N");
      }
      const int cell = static_cast<int>(row[0]);
      if (cell < 0 || cell >= n) throw std::runtime_error("init csv: cell out of range");
      for (int i = 0; i < P; ++i) f(i, cell) = row[i + 1];
    }
    if (f.minCoeff() < 0.0) throw std::runtime_error("init csv: missing cells or negative entry");
    // Renormalize small deviations of the per-cell sums; refuse large ones.
    for (int c = 0; c < n; ++c) {
      const double sum = f.col(c).sum();
      if (std::abs(sum - 1.0) > 1e-6) {
        std::ostringstream msg;
        msg << "init csv: cell " << c << " fractions sum to " << sum
            << "; discrepancy " << sum - 1.0 << " exceeds the 1e-6 renormalization limit";
        throw std::runtime_error(msg.str());
      }
      if (sum != 1.0) f.col(c) /= sum;
    }
  } else {
    throw std::runtime_error("unknown init preset: " + config.init_preset);
  }
  return f;
}

std::shared_ptr<CapillaryLaw> build_law(const RunConfig& config, const Grid& grid) {
  const int N = config.phase_count - 1;
  if (config.capillary_preset == "quadratic_uniform") {
    return std::make_shared<QuadraticCapillaryLaw>(
        QuadraticCapillaryLaw::uniform(grid.cell_count(), N, config.capillary_a));
  }
  if (config.capillary_preset == "csv") {
    std::ifstream in(config.capillary_csv);
    if (!in) throw std::runtime_error("cannot open capillary csv: " + config.capillary_csv);
    // rows: cell, A entries row-major (N*N), b entries (N)
    std::vector<Eigen::MatrixXd> A(grid.cell_count(), Eigen::MatrixXd::Zero(N, N));
    std::vector<Eigen::VectorXd> b(grid.cell_count(), Eigen::VectorXd::Zero(N));
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') continue;
      std::stringstream ss(line);
      std::string tok;
      std::vector<double> row;
      while (std::getline(ss, tok, ',')) row.push_back(std::stod(tok));
      if (static_cast<int>(row.size()) != 1 + N * N + N) {
        throw std::runtime_error("capillary csv: expected cell,A(row-major),b");
      }
      const int cell = static_cast<int>(row[0]);
      for (int i = 0; i < N; ++i) {
        for (int j = 0; j < N; ++j) A[cell](i, j) = row[1 + i * N + j];
      }
      for (int i = 0; i < N; ++i) b[cell][i] = row[1 + N * N + i];
    }
    return std::make_shared<QuadraticCapillaryLaw>(std::move(A), std::move(b));
  }
  throw std::runtime_error("unknown capillary preset: " + config.capillary_preset);
}

}  // namespace

RunSetup build_setup(const RunConfig& config) {
  RunSetup setup;
  setup.grid = build_grid(config.grid);

  if (config.medium_preset == "csv") {
    setup.medium = load_medium_csv(config.medium_csv, setup.grid, config.phase_count, config.mu,
                                   config.medium_anisotropic);
  } else {
    setup.medium = make_preset_medium(config.medium_preset, setup.grid, config.phase_count,
                                      config.mu, config.rho, config.gravity, config.omega,
                                      config.kappa);
  }

  const Eigen::MatrixXd fractions = initial_fractions(config, setup.grid);
  setup.s0 = PhaseField::from_fractions(setup.grid, setup.medium, fractions);
  setup.medium.mass.resize(config.phase_count);
  for (int i = 0; i < config.phase_count; ++i) {
    setup.medium.mass[i] = setup.s0.mass.row(i).sum();
  }
  setup.medium.validate(setup.grid);
  setup.s0.validate(setup.grid, setup.medium);

  setup.law = build_law(config, setup.grid);
  setup.bundle = build_cost_bundle(setup.grid, setup.medium);

  setup.jko.mode = config.exact_oracle ? TransportMode::exact : TransportMode::entropic;
  if (config.exact_oracle && setup.grid.cell_count() > 64) {
    throw std::runtime_error("exact-oracle mode caps the grid at 64 cells");
  }
  setup.jko.epsilon = config.epsilon;
  setup.jko.epsilon_rel = config.epsilon_rel;
  setup.jko.fw_tol_rel = config.fw_tol;
  setup.jko.max_fw_iterations = config.max_fw_iterations;
  setup.jko.sinkhorn.tol_rel = config.sinkhorn_tol;
  setup.jko.sinkhorn.max_iterations = config.sinkhorn_max_iterations;
  return setup;
}

namespace io {

void write_state_csv(const std::string& path, const Grid& grid, const PhaseField& s,
                     const Eigen::MatrixXd& p, const Eigen::MatrixXd& pi) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  const int P = s.phase_count();
  out << "# schema=1\n";
  out << "cell,x";
  if (grid.dim == 2) out << ",y";
  for (int i = 0; i < P; ++i) out << ",s_" << i;
  for (int i = 0; i < P; ++i) out << ",p_" << i;
  for (int i = 1; i < P; ++i) out << ",pi_" << i;
  out << "\n";
  for (int c = 0; c < s.cell_count(); ++c) {
    out << c << "," << fmt(grid.cell_centers[c][0]);
    if (grid.dim == 2) out << "," << fmt(grid.cell_centers[c][1]);
    for (int i = 0; i < P; ++i) out << "," << fmt(s.mass(i, c));
    for (int i = 0; i < P; ++i) out << "," << fmt(p.rows() == P ? p(i, c) : 0.0);
    for (int i = 1; i < P; ++i) out << "," << fmt(pi.rows() == P - 1 ? pi(i - 1, c) : 0.0);
    out << "\n";
  }
}

StateFile read_state_csv(const std::string& path, const Grid& grid, int phase_count) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  StateFile st;
  const int P = phase_count;
  const int n = grid.cell_count();
  st.s.cell_volume = grid.cell_volume;
  st.s.mass.resize(P, n);
  st.p.resize(P, n);
  st.pi.resize(P - 1, n);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("cell", 0) == 0) continue;
    std::stringstream ss(line);
    std::string tok;
    std::vector<double> row;
    while (std::getline(ss, tok, ',')) row.push_back(std::stod(tok));
    const int coord = grid.dim;
    if (static_cast<int>(row.size()) != 1 + coord + P + P + (P - 1)) {
      throw std::runtime_error("state csv: wrong column count");
    }
    const int cell = static_cast<int>(row[0]);
    int k = 1 + coord;
    for (int i = 0; i < P; ++i) st.s.mass(i, cell) = row[k++];
    for (int i = 0; i < P; ++i) st.p(i, cell) = row[k++];
    for (int i = 1; i < P; ++i) st.pi(i - 1, cell) = row[k++];
  }
  return st;
}

void write_diagnostics_csv(const std::string& path, const std::vector<DiagnosticsRow>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "# schema=1\n";
  const int P = rows.empty() ? 0 : static_cast<int>(rows.front().h_omega.size());
  out << "step,energy,w2,fw_gap,slack,grad_pi_sq,p_h1_sq,pi_h1_sq,capillary_residual,"
         "weak_residual_max,dissipation_lhs,dissipation_rhs";
  for (int i = 0; i < P; ++i) out << ",h_omega_" << i;
  out << "\n";
  for (const auto& r : rows) {
    out << r.step << "," << fmt(r.energy) << "," << fmt(r.w2) << "," << fmt(r.fw_gap) << ","
        << fmt(r.slack) << "," << fmt(r.grad_pi_sq) << "," << fmt(r.p_h1_sq) << ","
        << fmt(r.pi_h1_sq) << "," << fmt(r.capillary_residual) << ","
        << fmt(r.weak_residual_max) << "," << fmt(r.dissipation_lhs) << ","
        << fmt(r.dissipation_rhs);
    for (int i = 0; i < r.h_omega.size(); ++i) out << "," << fmt(r.h_omega[i]);
    out << "\n";
  }
}

void write_summary_csv(const std::string& path, const std::vector<CheckReport>& checks) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "# schema=1\n";
  out << "check,pass,value,detail\n";
  for (const auto& c : checks) {
    std::string detail = c.detail;
    for (auto& ch : detail) {
      if (ch == ',' ) ch = ';';
      if (ch == '\n') ch = ' ';
    }
    out << c.name << "," << (c.pass ? 1 : 0) << "," << fmt(c.value) << "," << detail << "\n";
  }
}

BathtubInstance read_bathtub_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  BathtubInstance inst;
  std::vector<double> omega;
  std::vector<std::vector<double>> F_rows;
  std::vector<double> masses;
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("# masses=", 0) == 0) {
      std::stringstream ss(line.substr(9));
      std::string tok;
      while (std::getline(ss, tok, ',')) masses.push_back(std::stod(tok));
      continue;
    }
    if (line.empty() || line[0] == '#' || line.rfind("cell", 0) == 0) continue;
    std::stringstream ss(line);
    std::string tok;
    std::vector<double> row;
    while (std::getline(ss, tok, ',')) row.push_back(std::stod(tok));
    if (row.size() < 3) throw std::runtime_error("bathtub csv: expected cell,omega,F_0..F_N");
    omega.push_back(row[1]);
    F_rows.push_back(std::vector<double>(row.begin() + 2, row.end()));
  }
  if (masses.empty()) throw std::runtime_error("bathtub csv: missing '# masses=' header");
  const int n = static_cast<int>(omega.size());
  const int P = static_cast<int>(masses.size());
  inst.omega = Eigen::Map<Eigen::VectorXd>(omega.data(), n);
  inst.m = Eigen::Map<Eigen::VectorXd>(masses.data(), P);
  inst.F.resize(P, n);
  for (int c = 0; c < n; ++c) {
    if (static_cast<int>(F_rows[c].size()) != P) {
      throw std::runtime_error("bathtub csv: F column count does not match masses");
    }
    for (int i = 0; i < P; ++i) inst.F(i, c) = F_rows[c][i];
  }
  return inst;
}

void write_bathtub_solution_csv(const std::string& path, const BathtubSolution& sol) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "# schema=1\n";
  out << "# primal=" << fmt(sol.primal_value) << " dual=" << fmt(sol.dual_value)
      << " converged=" << (sol.converged ? 1 : 0) << "\n";
  out << "# alpha=";
  for (int i = 0; i < sol.alpha.size(); ++i) out << (i ? "," : "") << fmt(sol.alpha[i]);
  out << "\n";
  out << "cell,lambda";
  for (int i = 0; i < sol.s.rows(); ++i) out << ",s_" << i;
  out << "\n";
  for (int c = 0; c < sol.s.cols(); ++c) {
    out << c << "," << fmt(sol.lambda[c]);
    for (int i = 0; i < sol.s.rows(); ++i) out << "," << fmt(sol.s(i, c));
    out << "\n";
  }
}

Eigen::MatrixXd read_matrix_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::stringstream ss(line);
    std::string tok;
    std::vector<double> row;
    while (std::getline(ss, tok, ',')) row.push_back(std::stod(tok));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error("matrix csv is empty: " + path);
  Eigen::MatrixXd m(rows.size(), rows[0].size());
  for (size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows[0].size()) throw std::runtime_error("ragged matrix csv");
    for (size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  }
  return m;
}

Eigen::VectorXd read_vector_csv(const std::string& path) {
  const Eigen::MatrixXd m = read_matrix_csv(path);
  if (m.cols() == 1) return m.col(0);
  if (m.rows() == 1) return m.row(0).transpose();
  throw std::runtime_error("vector csv must be a single row or column: " + path);
}

void write_plan_csv(const std::string& path, const Eigen::MatrixXd& plan) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "# schema=1\n";
  out << "from_cell,to_cell,mass\n";
  for (int i = 0; i < plan.rows(); ++i) {
    for (int j = 0; j < plan.cols(); ++j) {
      if (plan(i, j) > 0.0) out << i << "," << j << "," << fmt(plan(i, j)) << "\n";
    }
  }
}

}  // namespace io

int run_config(const RunConfig& config) {
  const RunSetup setup = build_setup(config);
  namespace fs = std::filesystem;
  fs::create_directories(config.output_dir);
  const auto state_path = [&](int n) {
    return config.output_dir + "/state_" + std::to_string(n) + ".csv";
  };

  // Initial state: pressures are undefined before the first step.
  {
    Eigen::MatrixXd pi0(config.phase_count - 1, setup.grid.cell_count());
    for (int c = 0; c < setup.grid.cell_count(); ++c) {
      pi0.col(c) = setup.law->pressure(c, setup.s0.reduced_density_at(c));
    }
    io::write_state_csv(state_path(0), setup.grid, setup.s0, Eigen::MatrixXd(), pi0);
  }

  std::vector<DiagnosticsRow> rows;
  std::vector<JKOStepRecord> records;
  bool aborted = false;
  std::string abort_reason;
  try {
    records = run_simulation(
        setup.s0, config.tau, config.horizon, setup.grid, setup.medium, *setup.law, setup.bundle,
        setup.jko, [&](int n, const JKOStepRecord& rec) {
          Eigen::MatrixXd pi(config.phase_count - 1, setup.grid.cell_count());
          for (int c = 0; c < setup.grid.cell_count(); ++c) {
            pi.col(c) = setup.law->pressure(c, rec.s_new.reduced_density_at(c));
          }
          io::write_state_csv(state_path(n), setup.grid, rec.s_new, rec.p, pi);
          if (config.diagnostics) {
            rows.push_back(compute_row(rec, n, setup.grid, setup.medium, *setup.law));
          }
        });
  } catch (const std::exception& ex) {
    aborted = true;
    abort_reason = ex.what();
  }

  if (config.diagnostics) {
    io::write_diagnostics_csv(config.output_dir + "/diagnostics.csv", rows);
  }

  std::vector<CheckReport> checks;
  if (aborted) {
    checks.push_back({"run_completed", false, 0.0, abort_reason});
  } else {
    checks.push_back({"run_completed", true, static_cast<double>(records.size()), ""});
  }
  if (!records.empty()) {
    checks.push_back(
        check_energy_decay(records, setup.grid, setup.medium, *setup.law));
    if (setup.grid.cell_count() <= 64) {
      checks.push_back(check_holder(records, setup.s0, setup.grid, setup.medium, *setup.law,
                                    setup.bundle));
    }
    checks.push_back(check_dissipation(records, setup.grid, setup.medium, *setup.law));

    double mass_drift = 0.0, sat_drift = 0.0, cap_res = 0.0;
    for (const auto& rec : records) {
      mass_drift = std::max(mass_drift, rec.s_new.mass_drift(setup.medium));
      sat_drift = std::max(sat_drift, rec.s_new.saturation_drift(setup.grid, setup.medium));
    }
    for (const auto& row : rows) cap_res = std::max(cap_res, row.capillary_residual);
    const double pore = setup.medium.pore_volume(setup.grid);
    checks.push_back({"mass_conservation", mass_drift <= 1e-9 * pore, mass_drift, ""});
    checks.push_back({"saturation", sat_drift <= 1e-9 * pore, sat_drift, ""});
    checks.push_back({"capillary_identity", cap_res <= 1e-12 * (1.0 + pore), cap_res, ""});
  }
  io::write_summary_csv(config.output_dir + "/summary.csv", checks);

  bool all_pass = true;
  for (const auto& c : checks) all_pass = all_pass && c.pass;
  for (const auto& c : checks) {
    std::cout << (c.pass ? "[PASS] " : "[FAIL] ") << c.name;
    if (!c.detail.empty()) std::cout << ": " << c.detail;
    std::cout << "\n";
  }
  return all_pass ? 0 : 1;
}

}  // namespace mmflow

#include "mmflow/jko.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace mmflow {

Eigen::MatrixXd assemble_F(const PhaseField& s_current, double tau,
                           const std::vector<TransportResult>& transports,
                           const CapillaryLaw& law, const MediumSpec& medium) {
  const int P = s_current.phase_count();
  const int n = s_current.cell_count();
  if (static_cast<int>(transports.size()) != P) {
    throw std::invalid_argument("assemble_F: missing potentials");
  }
  Eigen::MatrixXd F(P, n);
  for (int c = 0; c < n; ++c) {
    const Eigen::VectorXd pi = law.pressure(c, s_current.reduced_density_at(c));
    for (int i = 0; i < P; ++i) {
      const double phi_half = 0.5 * transports[i].phi[c];
      const double pi_i = i == 0 ? 0.0 : pi[i - 1];
      F(i, c) = phi_half / tau + pi_i + medium.psi(i, c);
    }
  }
  if (!F.allFinite()) throw std::runtime_error("assemble_F: non-finite field");
  return F;
}

PressureFields reconstruct_pressures(const Eigen::MatrixXd& F, const Eigen::MatrixXd& phi,
                                     const Eigen::VectorXd& alpha, const Eigen::VectorXd& lambda,
                                     const MediumSpec& medium, const Grid& grid, double tau) {
  (void)alpha;  // enters only through lambda = min_j(F_j + alpha_j)
  const int P = static_cast<int>(F.rows());
  const int n = static_cast<int>(F.cols());
  PressureFields out;
  out.h.resize(P, n);
  out.p.resize(P, n);

  Eigen::VectorXd h0 = (-phi.row(0) / tau + F.row(0)).transpose() - lambda;
  h0.array() -= h0.mean();  // normalize the reference head to zero mean
  out.h.row(0) = h0.transpose();
  out.p.row(0) = h0.transpose() - medium.psi.row(0);

  // For i >= 1 the head is rebuilt from h_0 and the capillary relation
  // pi_i + Psi_i = F_i - phi_i/tau, so that p_i - p_0 equals pi_i exactly.
  for (int i = 1; i < P; ++i) {
    for (int c = 0; c < n; ++c) {
      const double pi_plus_psi = F(i, c) - phi(i, c) / tau;
      const double psi0 = F(0, c) - phi(0, c) / tau;  // pi_0 = 0
      out.h(i, c) = h0[c] + pi_plus_psi - psi0;
      out.p(i, c) = out.h(i, c) - medium.psi(i, c);
    }
  }
  (void)grid;
  return out;
}

namespace {

struct Evaluation {
  std::vector<TransportResult> transports;
  double energy = 0.0;
  double objective = 0.0;
};

}  // namespace

JKOStepRecord jko_step(const PhaseField& s_prev_in, double tau, const Grid& grid,
                       const MediumSpec& medium, const CapillaryLaw& law,
                       const CostBundle& bundle, const JKOOptions& opts) {
  if (!(tau > 0.0)) throw std::invalid_argument("jko_step: tau must be positive");
  s_prev_in.validate(grid, medium, opts.constraint_tol);

  JKOStepRecord rec;
  rec.tau = tau;

  // Positivity regularization of the anchor, mirroring the approximation
  // device used when some phase vanishes on part of the domain.
  PhaseField anchor = s_prev_in;
  {
    const double floor = opts.positivity_floor_rel * medium.omega_lo * grid.cell_volume;
    if (anchor.mass.minCoeff() < floor) {
      RegularizeResult reg = regularize_positive(anchor, grid, medium, opts.positivity_delta,
                                                 opts.positivity_floor_rel,
                                                 opts.positivity_delta_cap);
      anchor = std::move(reg.field);
      rec.positivity_delta_used = reg.delta_used;
    }
  }
  rec.s_prev = anchor;

  const int P = anchor.phase_count();
  std::vector<double> eps(P, 0.0);
  if (opts.mode == TransportMode::entropic) {
    for (int i = 0; i < P; ++i) {
      eps[i] = opts.epsilon > 0.0 ? opts.epsilon
                                  : opts.epsilon_rel * median_offdiagonal(bundle.csq[i]);
    }
  }
  rec.epsilon_used = eps;

  std::vector<MassVector> anchor_phase;
  anchor_phase.reserve(P);
  for (int i = 0; i < P; ++i) anchor_phase.push_back(anchor.phase(i));

  SinkhornOptions sink = opts.sinkhorn;
  sink.want_plan = false;

  auto evaluate = [&](const PhaseField& s, const std::vector<TransportResult>* warm) {
    Evaluation ev;
    ev.transports.reserve(P);
    for (int i = 0; i < P; ++i) {
      const MassVector si = s.phase(i);
      TransportResult r;
      if (opts.mode == TransportMode::exact) {
        r = exact_w2(bundle.csq[i], si, anchor_phase[i]);
      } else {
        SinkhornOptions so = sink;
        if (warm) {
          so.warm_phi = (*warm)[i].phi;
          so.warm_psi = (*warm)[i].psi;
        }
        r = sinkhorn_w2(bundle.csq[i], si, anchor_phase[i], eps[i], so);
        if (!r.converged) {
          std::ostringstream msg;
          msg << "jko_step: sinkhorn did not converge (phase " << i
              << ", marginal error " << r.marginal_error << ")";
          throw std::runtime_error(msg.str());
        }
      }
      ev.transports.push_back(std::move(r));
    }
    ev.energy = total_energy(law, medium, grid, s, opts.constraint_tol);
    ev.objective = ev.energy;
    for (const auto& r : ev.transports) ev.objective += r.dual_value / (2.0 * tau);
    return ev;
  };

  PhaseField s = anchor;
  Evaluation cur = evaluate(s, nullptr);
  rec.energy_before = cur.energy;

  BathtubInstance oracle_instance;
  oracle_instance.omega = medium.porosity * grid.cell_volume;
  oracle_instance.m = Eigen::Map<const Eigen::VectorXd>(medium.mass.data(), P);

  const double pore = medium.pore_volume(grid);
  double gap = 0.0;
  Eigen::MatrixXd F;
  BathtubSolution bath;

  int k = 0;
  for (;; ++k) {
    F = assemble_F(s, tau, cur.transports, law, medium);
    oracle_instance.F = F;
    bath = solve_bathtub(oracle_instance, opts.bathtub_tol);
    if (!bath.converged) {
      throw std::runtime_error("jko_step: bathtub oracle failed: " + bath.diagnostic);
    }
    gap = (F.array() * (s.mass - bath.s).array()).sum();

    const bool done = gap <= opts.fw_tol_rel * (1.0 + std::abs(cur.objective));
    if (done || k >= opts.max_fw_iterations) {
      rec.converged = done;
      break;
    }

    // Backtracking line search on the true objective toward the oracle
    // vertex; sufficient decrease measured against the linear prediction.
    const Eigen::MatrixXd direction = bath.s - s.mass;
    double gamma = 2.0 / (k + 2.0);
    bool accepted = false;
    PhaseField s_best;
    Evaluation ev_best;
    double best_obj = cur.objective;
    for (int t = 0; t <= opts.max_backtracks; ++t) {
      PhaseField s_try = s;
      s_try.mass = s.mass + gamma * direction;
      Evaluation ev_try = evaluate(s_try, &cur.transports);
      if (ev_try.objective < best_obj) {
        best_obj = ev_try.objective;
        s_best = s_try;
        ev_best = std::move(ev_try);
        if (best_obj <= cur.objective - opts.armijo_decrease * gamma * gap) {
          accepted = true;
          break;
        }
      }
      gamma *= 0.5;
    }
    if (!accepted) {
      if (best_obj < cur.objective - 1e-14 * (1.0 + std::abs(cur.objective))) {
        accepted = true;  // plain decrease; keep the best trial
      } else {
        std::ostringstream msg;
        msg << "jko_step: line search failed at iteration " << k << " (gap " << gap
            << ", objective " << cur.objective << ")";
        throw std::runtime_error(msg.str());
      }
    }
    s = std::move(s_best);
    cur = std::move(ev_best);

    if (s.saturation_drift(grid, medium) > opts.constraint_tol * pore ||
        s.mass_drift(medium) > opts.constraint_tol * pore) {
      throw std::runtime_error("jko_step: internal constraint drift");
    }
  }

  rec.s_new = s;
  rec.fw_gap = gap;
  rec.fw_iterations = k;
  rec.objective = cur.objective;
  rec.energy_after = cur.energy;
  rec.F = F;
  rec.alpha = bath.alpha;
  rec.lambda = bath.lambda;
  rec.phi.resize(P, s.cell_count());
  rec.w2.resize(P);
  for (int i = 0; i < P; ++i) {
    rec.phi.row(i) = 0.5 * cur.transports[i].phi.transpose();
    rec.w2[i] = cur.transports[i].value;
  }
  const PressureFields pf =
      reconstruct_pressures(F, rec.phi, rec.alpha, rec.lambda, medium, grid, tau);
  rec.h = pf.h;
  rec.p = pf.p;
  return rec;
}

std::vector<JKOStepRecord> run_simulation(const PhaseField& s0, double tau, double horizon,
                                          const Grid& grid, const MediumSpec& medium,
                                          const CapillaryLaw& law, const CostBundle& bundle,
                                          const JKOOptions& opts, const StepCallback& callback) {
  if (!(tau > 0.0)) throw std::invalid_argument("run_simulation: tau must be positive");
  if (horizon < 0.0) throw std::invalid_argument("run_simulation: negative horizon");
  s0.validate(grid, medium, opts.constraint_tol);

  const int steps = static_cast<int>(std::ceil(horizon / tau - 1e-12));
  std::vector<JKOStepRecord> records;
  records.reserve(steps);
  PhaseField state = s0;
  for (int n = 1; n <= steps; ++n) {
    JKOStepRecord rec = jko_step(state, tau, grid, medium, law, bundle, opts);
    state = rec.s_new;
    records.push_back(std::move(rec));
    if (callback) callback(n, records.back());
  }
  return records;
}

}  // namespace mmflow

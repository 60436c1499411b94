#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "mmflow/energy.hpp"
#include "mmflow/jko.hpp"

namespace mmflow {

/// Shared discrete gradient: two-point differences over the axis faces.
/// ||grad f||^2 ~ sum_faces ((f_b - f_a)/dist)^2 * cell_volume.
double grad_norm_sq(const Eigen::VectorXd& f, const Grid& grid);
/// ||f||^2_{H^1} = sum f^2 vol + ||grad f||^2.
double h1_norm_sq(const Eigen::VectorXd& f, const Grid& grid);

/// Entropic bias budget entering the slack of the energy inequalities:
/// per phase 2 * eps_i * m_i * (log(cells) + 4), divided by 2 tau.
double entropic_bias_budget(const JKOStepRecord& rec, const MediumSpec& medium);

struct DiagnosticsRow {
  int step = 0;
  double energy = 0.0;            // E(s^n)
  double w2 = 0.0;                // W^2(s^n, s^{n-1})
  Eigen::VectorXd h_omega;        // per-phase relative entropies at s^n
  double grad_pi_sq = 0.0;        // sum_i ||grad pi_i||^2
  double p_h1_sq = 0.0;           // sum_i ||p_i||^2_{H^1}
  double pi_h1_sq = 0.0;          // sum_i ||pi_i||^2_{H^1}
  double fw_gap = 0.0;
  double slack = 0.0;             // fw_gap + entropic bias budget
  double capillary_residual = 0.0;  // max |(p_i - p_0) - pi_i|
  double weak_residual_max = 0.0;
  double dissipation_lhs = 0.0;   // (E^n - E^{n-1}) / tau
  double dissipation_rhs = 0.0;   // minus the discrete dissipation quadrature
};

DiagnosticsRow compute_row(const JKOStepRecord& rec, int step, const Grid& grid,
                           const MediumSpec& medium, const CapillaryLaw& law);

struct CheckReport {
  std::string name;
  bool pass = true;
  double value = 0.0;
  std::string detail;
};

/// Per-step inequality W^2/(2 tau) + E(s^n) <= E(s^{n-1}) + slack and the
/// cumulative bound sum W^2/tau <= 2 * (E(s^0) + floor shift) * (1 + margin).
CheckReport check_energy_decay(const std::vector<JKOStepRecord>& records, const Grid& grid,
                               const MediumSpec& medium, const CapillaryLaw& law,
                               double margin = 0.05);

/// Evaluates W(s(t2), s(t1)) <= C sqrt(|t2 - t1| + tau) on sampled index
/// pairs, C = sqrt(2 E~(s^0)); reports the empirical constant. Exact
/// transport solves (desk-scale states).
CheckReport check_holder(const std::vector<JKOStepRecord>& records, const PhaseField& s0,
                         const Grid& grid, const MediumSpec& medium, const CapillaryLaw& law,
                         const CostBundle& bundle, int max_pairs = 24, double margin = 1.0);

struct FlowInterchangeReport {
  double lhs = 0.0;      // sum_i ||grad pi_i^n||^2
  double bracket = 0.0;  // 1 + W^2/tau + sum_i (H(s_i^{n-1}) - H(s_i^n))/tau
  double c_emp = 0.0;
};

FlowInterchangeReport check_flow_interchange(const JKOStepRecord& rec, const Grid& grid,
                                             const MediumSpec& medium, const CapillaryLaw& law);

/// Quadratic test function with analytic gradient and constant Hessian.
struct TestFunction {
  std::string name;
  std::function<double(double, double)> eval;
  std::function<Eigen::Vector2d(double, double)> grad;
  Eigen::Matrix2d hessian = Eigen::Matrix2d::Zero();
};

std::vector<TestFunction> polynomial_test_functions(int dim);

/// Metric Hessian bound for a constant-Hessian test function:
/// max_cells ||K(x) H|| / mu_i, inflated by sqrt(kappa_hi/kappa_lo) for
/// heterogeneous media (documented coarse factor).
double metric_hessian_bound(const TestFunction& xi, const MediumSpec& medium, int phase);

struct WeakFormResidual {
  std::string function;
  int phase = 0;
  double residual = 0.0;
  double bound_scale = 0.0;  // W_i^2 * metric Hessian bound
};

/// Residuals of the discrete weak form
///   |int (s^n - s^{n-1}) xi + tau int s^n (K/mu) grad(p + Psi).grad xi|
/// per phase and test function.
std::vector<WeakFormResidual> check_weak_form(const JKOStepRecord& rec, const Grid& grid,
                                              const MediumSpec& medium,
                                              const std::vector<TestFunction>& xis);

/// Compares (E^n - E^{n-1})/tau with minus the dissipation quadrature
/// sum_i int (s_i/mu_i) K grad(p_i+Psi_i).grad(p_i+Psi_i); returns the mean
/// relative mismatch over the trajectory.
CheckReport check_dissipation(const std::vector<JKOStepRecord>& records, const Grid& grid,
                              const MediumSpec& medium, const CapillaryLaw& law);

/// Time-integrated pressure norms tau * sum_n ||p^n||^2_{H^1} (and the same
/// for pi); across a refinement family the values must stay within a factor
/// of each other.
struct PressureNormSummary {
  double tau = 0.0;
  double p_h1_time_integral = 0.0;
  double pi_h1_time_integral = 0.0;
  double capillary_residual_max = 0.0;
};

PressureNormSummary pressure_norm_summary(double tau, const std::vector<JKOStepRecord>& records,
                                          const Grid& grid, const MediumSpec& medium,
                                          const CapillaryLaw& law);

CheckReport check_pressure_norms(const std::vector<PressureNormSummary>& family,
                                 double factor = 2.0);

}  // namespace mmflow

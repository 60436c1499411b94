#pragma once

#include <Eigen/Dense>

#include "mmflow/field.hpp"
#include "mmflow/grid.hpp"
#include "mmflow/medium.hpp"

namespace mmflow {

/// One implicit-Euler run of the porosity-weighted drift-diffusion flow
///   d/dt s = div(K grad s - s K grad log omega),  no-flux boundary,
/// discretized in the ratio u = s / omega with two-point fluxes
/// T_ab (u_b - u_a), T_ab = K_face * omega_face * area / dist. This form
/// keeps omega an exact steady state, conserves mass in flux form, and the
/// implicit system is an M-matrix, so nonnegativity is preserved.
///
/// `delta` is the total flow time, split into `substeps` implicit steps.
Eigen::VectorXd aux_step(const Eigen::VectorXd& mass, const Grid& grid, const MediumSpec& medium,
                         double delta, int substeps = 1);

struct RegularizeResult {
  PhaseField field;
  double delta_used = 0.0;  // 0 when the input was already positive
};

/// Applies the auxiliary flow with the same time to every phase until the
/// minimum density exceeds floor_rel * min(omega); doubles delta up to
/// delta_cap. The per-cell saturation is preserved because omega is a
/// steady state of the same linear flow.
RegularizeResult regularize_positive(const PhaseField& s, const Grid& grid,
                                     const MediumSpec& medium, double delta,
                                     double floor_rel = 1e-12, double delta_cap = 1.0);

}  // namespace mmflow

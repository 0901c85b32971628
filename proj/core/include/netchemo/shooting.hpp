#pragma once

#include "netchemo/boundary.hpp"
#include "netchemo/stationary.hpp"

namespace netchemo {

struct ShootingOptions {
  int refine = 8;        // fine integration steps per half grid cell
  double tol = 1e-11;    // sup-norm target for the matching residual
  int max_newton = 60;
};

/// Direct solve of the stationary boundary-value problem on a tiny acyclic
/// network (<= 3 arcs): dense Runge-Kutta integration of the Psi equation per
/// arc with unknowns (Psi(0), Psi'(0), C_i), Newton iteration on the finite
/// matching system (Robin exits, node couplings for Psi and U, total mass).
/// Shares nothing with the fixed-point construction beyond compute_V.
StationaryProfile shooting_oracle(const Network& net, const BoundarySpec& bc, double mu_s,
                                  const ShootingOptions& opt = {});

}  // namespace netchemo

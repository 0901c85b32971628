#pragma once

#include "netchemo/graph.hpp"

#include <vector>

namespace netchemo {

/// Constant-plus-decaying-exponential signal f(t) = inf + amp * exp(-rate t).
/// The decaying form keeps f - inf integrable on (0, inf), which the mass
/// and stability diagnostics rely on.
struct DecaySignal {
  double inf = 0;
  double amp = 0;
  double rate = 1;

  double value(double t) const;
  /// Exact antiderivative: integral of f over (0, t).
  double integral(double t) const;
};

struct ExitData {
  NodeId exit = -1;
  double robin_d = 0;  // d_j
  DecaySignal W;       // flux datum, eta_j lambda v = W_j(t)
  DecaySignal P;       // Robin datum, eta_j D psi_x + d_j psi = P_j(t)
};

/// Time-dependent boundary data per external node.
struct BoundarySpec {
  std::vector<ExitData> exits;  // sorted by exit id

  const ExitData& at(NodeId exit) const;
  /// Throws on rate <= 0 with a nonzero amplitude, or unknown/missing exits.
  void validate(const Network& net) const;
  /// Sum of the flux limits W_inf over all exits (stationary compatibility).
  double total_w_inf() const;
};

}  // namespace netchemo

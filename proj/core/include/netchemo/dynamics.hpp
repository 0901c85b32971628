#pragma once

#include "netchemo/boundary.hpp"
#include "netchemo/elliptic.hpp"
#include "netchemo/graph.hpp"
#include "netchemo/node_coupling.hpp"

#include <functional>
#include <map>
#include <memory>

namespace netchemo {

/// Cell-centered fields of one simulation; psi additionally carries its two
/// endpoint values per arc so the implicit step sees the full P1 function.
struct SimState {
  double t = 0;
  std::vector<Eigen::VectorXd> u, v, psi;    // per arc, grid_cells values
  std::vector<double> psi_end0, psi_endL;    // per arc
  std::vector<Eigen::VectorXd> psi_x;        // per arc, cell centers
  double mass0 = 0;
  std::vector<double> boundary_integrals;    // exact integral of W_j up to t

  Eigen::VectorXd psi_p1(int arc_index) const;  // [end0, cells..., endL]
};

struct StepReport {
  double dt = 0;
  double cfl = 0;
  std::vector<double> node_condition;  // per internal node, constant in time
  double max_node_flux_residual = 0;
  double max_node_flux_rel = 0;        // residual over the node's |lambda v| scale
  double max_dissipation_gap = 0;      // defect of the quadratic-form identity
  double max_dissipation_rel = 0;
  double mass_residual = 0;
};

struct SupBound {
  double lhs = 0;  // max_i ||u_i||_inf
  double rhs = 0;  // |mu|/|A| + 2 sum_j (2 ||u_jx||_1 + 3 gamma ||v_j||_inf)
};

struct ReferenceFields {
  std::vector<Eigen::VectorXd> u, v, psi;
};

struct HistorySample {
  double t = 0;
  std::vector<Eigen::VectorXd> u, v, psi;
};

/// Time integrator: backward-Euler psi step through the elliptic operator,
/// then first-order upwind transport of the Riemann invariants u +- v with
/// junction traces from the transmission solve. Lie splitting, psi first.
class Stepper {
public:
  Stepper(const Network& net, const BoundarySpec& bc);

  /// 0.9 min_i h_i / lambda_i, additionally capped by min_i h_i.
  double default_dt() const;

  StepReport step(SimState& state, double dt);

  void parabolic_step(SimState& state, double dt) const;
  void hyperbolic_step(SimState& state, double dt);  // also records node residuals

  double mass(const SimState& state) const;
  double mass_residual(const SimState& state) const;

  /// Both sides of the sup-norm estimate; requires condition (nd).
  SupBound sup_bound_check(const SimState& state) const;

  const Network& net() const { return *net_; }
  const BoundarySpec& boundary() const { return bc_; }

  /// Fresh state from per-arc initial functions of x.
  SimState make_state(const std::function<double(ArcId, double)>& u0,
                      const std::function<double(ArcId, double)>& v0,
                      const std::function<double(ArcId, double)>& psi0) const;

private:
  const Network* net_;
  BoundarySpec bc_;
  std::vector<NodeCoupler> couplers_;        // per internal node
  std::vector<double> node_condition_;
  mutable std::map<long long, std::shared_ptr<EllipticOperator>> ops_;  // keyed by dt bits
  mutable double gamma_ = -1;                // lazy; needs (nd)

  const EllipticOperator& op_for_dt(double dt) const;
  double last_flux_residual_ = 0;
  double last_flux_rel_ = 0;
  double last_dissipation_gap_ = 0;
  double last_dissipation_rel_ = 0;
};

/// Field-wise sup distance between a state and reference cell data.
double sup_distance(const SimState& s, const ReferenceFields& ref);
/// Discrete H1 distance (values plus first differences), all fields.
double h1_distance(const Network& net, const SimState& s, const ReferenceFields& ref);

/// Discrete analog of the squared deviation functional: sup-in-time H1 norms
/// of (u,v) and H2 of psi plus time integrals of the listed norms, measured
/// against a stationary reference. Needs at least two samples.
double ft_functional(const Network& net, const std::vector<HistorySample>& history,
                     const ReferenceFields& ref);

}  // namespace netchemo

#pragma once

#include "netchemo/graph.hpp"

#include <Eigen/Dense>

namespace netchemo {

/// Trace values produced by one junction solve, in the node's local arc order.
struct NodeTraces {
  Eigen::VectorXd u;
  Eigen::VectorXd v;
  double flux_residual = 0;     // |sum_i delta_i lambda_i v_i|
  double flux_scale = 0;        // max_i |lambda_i v_i|
  double dissipation_lhs = 0;   // sum_i delta_i lambda_i u_i v_i
  double dissipation_rhs = 0;   // sum_{i<j} sigma_ij (u_j - u_i)^2
  double dissipation_scale = 0; // magnitude of the terms entering both sides
};

/// Per-node solver for the coupled characteristic/transmission system
///   u_i + delta_i v_i = w_i                    (outgoing characteristics)
///   -delta_i lambda_i v_i = sum_j sigma_ij (u_j - u_i)
/// Eliminating u reduces it to a symmetric strictly diagonally dominant
/// system in delta_i lambda_i v_i, which is invertible for any sigma >= 0.
class NodeCoupler {
public:
  NodeCoupler(const Network& net, const InternalNode& node);

  /// w holds the outgoing characteristic u_i + delta_i v_i per incident arc,
  /// extrapolated from the arc interior, in local arc order.
  NodeTraces solve(const Eigen::VectorXd& w) const;

  double condition_number() const { return cond_; }
  int size() const { return static_cast<int>(lambda_.size()); }

private:
  Eigen::VectorXd lambda_;       // per incident arc
  Eigen::VectorXi delta_;
  Eigen::MatrixXd sigma_;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
  double cond_ = 0;
};

/// Boundary trace at an external node: eta lambda v = W fixes v, the
/// characteristic relation u + eta v = w fixes u.
struct ExternalTrace {
  double u = 0, v = 0;
};
ExternalTrace external_trace(int eta, double lambda, double W, double w_out);

/// Coefficients gamma of the jump representation at a node with pivot k:
///   u_i(N) - u_k(N) = sum_j Gamma(j, i) v_j(N)
/// obtained by inverting the non-pivot block of the transmission conditions.
/// Requires condition (nd); throws ValidationError otherwise or when sigma
/// leaves the block singular.
Eigen::MatrixXd gamma_matrix(const Network& net, const InternalNode& node);

/// max |gamma^nu_{ij}| over all internal nodes; 0 when there are none.
double gamma_max(const Network& net);

/// Jumps u_i(N) - u_k(N) produced by arcwise-constant v values (stationary
/// use: v_i = V_i). Same solve as gamma_matrix applied to a concrete vector.
Eigen::VectorXd node_jumps(const Network& net, const InternalNode& node,
                           const Eigen::VectorXd& v_at_node);

}  // namespace netchemo

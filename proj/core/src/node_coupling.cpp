#include "netchemo/node_coupling.hpp"

#include <cmath>

namespace netchemo {

namespace {

// Reduced junction matrix on vt_i = delta_i lambda_i v_i / lambda_i ... kept
// in the variables vt_i = delta_i v_i:  M vt = rhs with
//   M_ii = -lambda_i - sum_{j != i} sigma_ij,  M_ij = sigma_ij.
Eigen::MatrixXd reduced_matrix(const Eigen::VectorXd& lambda, const Eigen::MatrixXd& sigma) {
  const int m = static_cast<int>(lambda.size());
  Eigen::MatrixXd M(m, m);
  for (int i = 0; i < m; ++i) {
    double offsum = 0;
    for (int j = 0; j < m; ++j)
      if (j != i) {
        M(i, j) = sigma(i, j);
        offsum += sigma(i, j);
      }
    M(i, i) = -lambda(i) - offsum;
  }
  return M;
}

}  // namespace

NodeCoupler::NodeCoupler(const Network& net, const InternalNode& node) {
  const int m = static_cast<int>(node.incident.size());
  lambda_.resize(m);
  delta_.resize(m);
  sigma_ = node.sigma;
  for (int i = 0; i < m; ++i) {
    lambda_(i) = net.arc(node.incident[i]).par.lambda;
    delta_(i) = net.delta(node.id, node.incident[i]);
  }
  Eigen::MatrixXd M = reduced_matrix(lambda_, sigma_);
  lu_.compute(M);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
  const auto& ev = es.eigenvalues();
  double lo = ev.cwiseAbs().minCoeff(), hi = ev.cwiseAbs().maxCoeff();
  cond_ = lo > 0 ? hi / lo : std::numeric_limits<double>::infinity();
}

NodeTraces NodeCoupler::solve(const Eigen::VectorXd& w) const {
  const int m = size();
  Eigen::VectorXd rhs(m);
  for (int i = 0; i < m; ++i) {
    double s = 0;
    for (int j = 0; j < m; ++j)
      if (j != i) s += sigma_(i, j) * (w(j) - w(i));
    rhs(i) = s;
  }
  Eigen::VectorXd vt = lu_.solve(rhs);

  NodeTraces out;
  out.u.resize(m);
  out.v.resize(m);
  double flux = 0;
  for (int i = 0; i < m; ++i) {
    out.u(i) = w(i) - vt(i);
    out.v(i) = delta_(i) * vt(i);
    flux += lambda_(i) * vt(i);
    out.flux_scale = std::max(out.flux_scale, std::fabs(lambda_(i) * vt(i)));
    out.dissipation_lhs += delta_(i) * lambda_(i) * out.u(i) * out.v(i);
    out.dissipation_scale += lambda_(i) * std::fabs(out.u(i) * out.v(i));
  }
  out.flux_residual = std::fabs(flux);
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j) {
      double d = out.u(j) - out.u(i);
      out.dissipation_rhs += sigma_(i, j) * d * d;
      out.dissipation_scale += sigma_(i, j) * (out.u(i) * out.u(i) + out.u(j) * out.u(j));
    }
  return out;
}

ExternalTrace external_trace(int eta, double lambda, double W, double w_out) {
  ExternalTrace t;
  t.v = eta * W / lambda;
  t.u = w_out - W / lambda;
  return t;
}

Eigen::MatrixXd gamma_matrix(const Network& net, const InternalNode& node) {
  if (node.pivot < 0)
    throw ValidationError("condition (nd) violated at node " + std::to_string(node.id));
  const int m = static_cast<int>(node.incident.size());
  const int k = node.local_index(node.pivot);

  std::vector<int> rest;
  for (int i = 0; i < m; ++i)
    if (i != k) rest.push_back(i);
  const int r = static_cast<int>(rest.size());

  // Non-pivot block of the transmission conditions, written for the jumps z_i = u_i - u_k.
  Eigen::MatrixXd B(r, r);
  for (int a = 0; a < r; ++a) {
    int i = rest[a];
    double offsum = 0;
    for (int j = 0; j < m; ++j)
      if (j != i) offsum += node.sigma(i, j);
    for (int b = 0; b < r; ++b) {
      int j = rest[b];
      B(a, b) = (i == j) ? -offsum : node.sigma(i, j);
    }
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(B);
  if (!lu.isInvertible())
    throw ValidationError("transmission block singular at node " + std::to_string(node.id) +
                          " (sigma kernel too large)");
  Eigen::MatrixXd Binv = lu.inverse();

  Eigen::MatrixXd gamma = Eigen::MatrixXd::Zero(m, m);  // gamma(j, i): weight of v_j in z_i
  for (int a = 0; a < r; ++a)
    for (int b = 0; b < r; ++b) {
      int i = rest[a], j = rest[b];
      double dl = net.delta(node.id, node.incident[j]) * net.arc(node.incident[j]).par.lambda;
      gamma(j, i) = -Binv(a, b) * dl;
    }
  return gamma;
}

double gamma_max(const Network& net) {
  double g = 0;
  for (const auto& node : net.internal_nodes)
    g = std::max(g, gamma_matrix(net, node).cwiseAbs().maxCoeff());
  return g;
}

Eigen::VectorXd node_jumps(const Network& net, const InternalNode& node,
                           const Eigen::VectorXd& v_at_node) {
  Eigen::MatrixXd gamma = gamma_matrix(net, node);
  return gamma.transpose() * v_at_node;
}

}  // namespace netchemo

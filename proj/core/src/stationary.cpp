#include "netchemo/stationary.hpp"

#include "netchemo/node_coupling.hpp"

#include <cmath>
#include <set>
#include <sstream>

namespace netchemo {

namespace {

ArcGrid grid_of(const Network& net, int ai) {
  return ArcGrid{net.arcs[ai].par.length, net.arcs[ai].par.grid_cells};
}

Eigen::VectorXd trapezoid_weights(const ArcGrid& g) {
  const int n = g.npoints();
  Eigen::VectorXd w = Eigen::VectorXd::Zero(n);
  for (int p = 0; p + 1 < n; ++p) {
    const double len = g.point(p + 1) - g.point(p);
    w(p) += 0.5 * len;
    w(p + 1) += 0.5 * len;
  }
  return w;
}

Eigen::MatrixXd gamma_with_pivot(const Network& net, const InternalNode& node,
                                 const std::map<NodeId, ArcId>& overrides) {
  auto it = overrides.find(node.id);
  if (it == overrides.end()) return gamma_matrix(net, node);
  InternalNode n2 = node;
  const int k = node.local_index(it->second);
  for (int i = 0; i < static_cast<int>(node.incident.size()); ++i)
    if (i != k && node.sigma(i, k) == 0.0)
      throw StationaryError("pivot override " + std::to_string(it->second) +
                            " inadmissible at node " + std::to_string(node.id));
  n2.pivot = it->second;
  return gamma_matrix(net, n2);
}

int endpoint_index(const ArcGrid& g, int side) { return side == 0 ? 0 : g.npoints() - 1; }

}  // namespace

double StationaryResiduals::worst() const {
  double w = 0;
  for (double r : {max_psi_ode, max_momentum_ode, max_tc, max_kc, max_robin, max_wflux,
                   mass_error})
    w = std::max(w, r);
  return w;
}

std::string StationaryResiduals::to_string() const {
  std::ostringstream os;
  os << "psi_ode " << max_psi_ode << ", momentum " << max_momentum_ode << ", tc " << max_tc
     << ", kc " << max_kc << ", robin " << max_robin << ", wflux " << max_wflux << ", mass "
     << mass_error;
  return os.str();
}

Eigen::VectorXd StationaryProfile::u_cells(int arc_index) const {
  return U[arc_index].segment(1, U[arc_index].size() - 2);
}

Eigen::VectorXd StationaryProfile::psi_cells(int arc_index) const {
  return Psi[arc_index].segment(1, Psi[arc_index].size() - 2);
}

std::vector<double> compute_V(const Network& net, const std::vector<double>& W_by_exit) {
  if (!net.acyclic) throw StationaryError("compute_V requires an acyclic network");
  if (W_by_exit.size() != net.external_nodes.size())
    throw std::invalid_argument("W vector does not match the exit count");

  double wsum = 0, wscale = 1;
  for (double w : W_by_exit) {
    wsum += w;
    wscale = std::max(wscale, std::fabs(w));
  }
  if (std::fabs(wsum) > 1e-12 * wscale)
    throw StationaryError("incompatible boundary fluxes: sum W_j = " + std::to_string(wsum));

  const int na = static_cast<int>(net.arcs.size());
  std::vector<double> V(na, 0.0);
  std::vector<bool> fixed(na, false);
  for (size_t j = 0; j < net.external_nodes.size(); ++j) {
    const auto& ex = net.external_nodes[j];
    const int ai = net.arc_index(ex.arc);
    const double val = ex.eta * W_by_exit[j] / net.arcs[ai].par.lambda;
    if (fixed[ai] && std::fabs(V[ai] - val) > 1e-12 * wscale)
      throw StationaryError("inconsistent flux data on arc " + std::to_string(ex.arc));
    V[ai] = val;
    fixed[ai] = true;
  }
  for (int ai = 0; ai < na; ++ai) {
    if (fixed[ai]) continue;
    // Internal arc: flux balance over the start-side component.
    std::vector<NodeId> side = exit_side_set(net, net.arcs[ai].id);
    double s = 0;
    for (NodeId e : side) {
      for (size_t j = 0; j < net.external_nodes.size(); ++j)
        if (net.external_nodes[j].id == e) s += W_by_exit[j];
    }
    V[ai] = -s / net.arcs[ai].par.lambda;
  }
  return V;
}

CoefficientChain coefficient_chain(const Network& net,
                                   const std::vector<Eigen::VectorXd>& Psi,
                                   const std::vector<double>& V, double mu_s,
                                   const ChainOptions& opt) {
  const int na = static_cast<int>(net.arcs.size());
  CoefficientChain ch;
  ch.E.resize(na);
  ch.J.resize(na);
  ch.log_Qt.assign(na, 0.0);
  ch.Ot.assign(na, 0.0);

  std::vector<Eigen::VectorXd> logE(na);
  std::vector<double> intE(na), logIntE(na);
  for (int ai = 0; ai < na; ++ai) {
    const ArcGrid g = grid_of(net, ai);
    const double lam = net.arcs[ai].par.lambda;
    const double beta = net.arcs[ai].par.beta;
    if (Psi[ai].size() != g.npoints())
      throw std::invalid_argument("Psi grid size mismatch on arc index " + std::to_string(ai));
    logE[ai] = Psi[ai] / lam;
    ch.E[ai] = logE[ai].array().exp();
    Eigen::VectorXd em = (-logE[ai]).array().exp();
    ch.J[ai].resize(g.npoints());
    ch.J[ai](0) = 0;
    for (int p = 0; p + 1 < g.npoints(); ++p) {
      const double len = g.point(p + 1) - g.point(p);
      ch.J[ai](p + 1) = ch.J[ai](p) + (beta / lam) * 0.5 * len * (em(p) + em(p + 1));
    }
    intE[ai] = trapezoid_weights(g).dot(ch.E[ai]);
    logIntE[ai] = std::log(intE[ai]);
    if (!std::isfinite(intE[ai]) || !std::isfinite(ch.J[ai](g.npoints() - 1)))
      throw StationaryError("degenerate coefficient chain: exp(Psi/lambda) overflow on arc " +
                            std::to_string(net.arcs[ai].id));
  }

  // Side of arc ai facing node nu, and the endpoint values there.
  auto side_at = [&](int ai, NodeId nu) { return net.delta(nu, net.arcs[ai].id) > 0 ? 1 : 0; };

  std::vector<bool> assigned(na, false);
  if (!net.internal_nodes.empty()) {
    std::vector<SpanningEntry> order =
        opt.root ? spanning_order(net, opt.root) : net.spanning;
    if (order.empty()) order = spanning_order(net, opt.root);

    for (const auto& entry : order) {
      const InternalNode& node = net.internal_node(entry.node);
      const int m = static_cast<int>(node.incident.size());
      auto it = opt.pivot_override.find(node.id);
      const ArcId pivot = it == opt.pivot_override.end() ? node.pivot : it->second;
      if (pivot < 0)
        throw StationaryError("condition (nd) violated at node " + std::to_string(node.id));
      const int ak = net.arc_index(pivot);

      Eigen::VectorXd v_local(m);
      for (int i = 0; i < m; ++i) v_local(i) = V[net.arc_index(node.incident[i])];
      Eigen::MatrixXd gamma = gamma_with_pivot(net, node, opt.pivot_override);
      Eigen::VectorXd jumps = gamma.transpose() * v_local;

      const int sk = side_at(ak, node.id);
      const double logEk = logE[ak](endpoint_index(grid_of(net, ak), sk));
      const double Ek = ch.E[ak](endpoint_index(grid_of(net, ak), sk));
      const double Jk = ch.J[ak](endpoint_index(grid_of(net, ak), sk));

      Eigen::VectorXd Qlog(m), O(m);
      for (int i = 0; i < m; ++i) {
        const int ai = net.arc_index(node.incident[i]);
        const int si = side_at(ai, node.id);
        const int pi = endpoint_index(grid_of(net, ai), si);
        Qlog(i) = logEk - logE[ai](pi);
        O(i) = (-V[ak] * Ek * Jk + jumps(i)) / ch.E[ai](pi) + V[ai] * ch.J[ai](pi);
      }
      ch.Q_node[node.id] = Qlog.array().exp();
      ch.O_node[node.id] = O;

      if (entry.parent_arc < 0) {
        for (int i = 0; i < m; ++i) {
          const int ai = net.arc_index(node.incident[i]);
          ch.log_Qt[ai] = Qlog(i);
          ch.Ot[ai] = O(i);
          assigned[ai] = true;
        }
      } else {
        const int al = net.arc_index(entry.parent_arc);
        const int l = node.local_index(entry.parent_arc);
        if (!assigned[al])
          throw std::logic_error("spanning order visited a child before its parent arc");
        for (int i = 0; i < m; ++i) {
          if (i == l) continue;
          const int ai = net.arc_index(node.incident[i]);
          ch.log_Qt[ai] = Qlog(i) + ch.log_Qt[al] - Qlog(l);
          ch.Ot[ai] = std::exp(Qlog(i) - Qlog(l)) * (ch.Ot[al] - O(l)) + O(i);
          assigned[ai] = true;
        }
      }
    }
  }
  // A connected acyclic graph without internal nodes is the single arc.
  for (int ai = 0; ai < na; ++ai)
    if (!assigned[ai] && !net.internal_nodes.empty())
      throw std::logic_error("arc missed by the chain traversal");

  ch.lambda2 = 0;
  ch.lambda1 = 0;
  for (int ai = 0; ai < na; ++ai) {
    ch.lambda2 += std::exp(ch.log_Qt[ai] + logIntE[ai]);
    const ArcGrid g = grid_of(net, ai);
    Eigen::VectorXd w = trapezoid_weights(g);
    Eigen::VectorXd integrand =
        (ch.Ot[ai] - (V[ai] * ch.J[ai].array())).matrix().cwiseProduct(ch.E[ai]);
    ch.lambda1 += w.dot(integrand);
  }
  if (!(ch.lambda2 > 0) || !std::isfinite(ch.lambda2) || !std::isfinite(ch.lambda1))
    throw StationaryError("degenerate coefficient chain: Lambda_2 = " +
                          std::to_string(ch.lambda2));

  ch.C_k1 = (mu_s - ch.lambda1) / ch.lambda2;
  ch.C.resize(na);
  ch.U.resize(na);
  for (int ai = 0; ai < na; ++ai) {
    ch.C[ai] = std::exp(ch.log_Qt[ai]) * ch.C_k1 + ch.Ot[ai];
    ch.U[ai] = ch.E[ai].cwiseProduct(
        (ch.C[ai] - (V[ai] * ch.J[ai].array())).matrix());
    if (!ch.U[ai].allFinite())
      throw StationaryError("degenerate coefficient chain: non-finite U on arc " +
                            std::to_string(net.arcs[ai].id));
  }
  return ch;
}

double h1_norm_ext(const Network& net, const std::vector<Eigen::VectorXd>& f) {
  double s = 0;
  for (size_t ai = 0; ai < net.arcs.size(); ++ai) {
    const ArcGrid g{net.arcs[ai].par.length, net.arcs[ai].par.grid_cells};
    Eigen::VectorXd w = trapezoid_weights(g);
    s += w.dot(f[ai].cwiseProduct(f[ai]));
    for (int p = 0; p + 1 < g.npoints(); ++p) {
      const double len = g.point(p + 1) - g.point(p);
      const double d = (f[ai](p + 1) - f[ai](p)) / len;
      s += len * d * d;
    }
  }
  return std::sqrt(s);
}

StationaryProfile fixed_point(const Network& net, const BoundarySpec& bc, double mu_s,
                              const FixedPointOptions& opt) {
  if (!net.acyclic) throw StationaryError("fixed_point requires an acyclic network");
  bc.validate(net);

  std::vector<double> W(net.external_nodes.size()), P(net.external_nodes.size());
  for (size_t j = 0; j < net.external_nodes.size(); ++j) {
    W[j] = bc.at(net.external_nodes[j].id).W.inf;
    P[j] = bc.at(net.external_nodes[j].id).P.inf;
  }
  std::vector<double> V = compute_V(net, W);

  std::vector<double> reaction;
  for (const auto& a : net.arcs) reaction.push_back(a.par.degradation);
  EllipticOperator op(net, reaction);

  const int na = static_cast<int>(net.arcs.size());
  std::vector<Eigen::VectorXd> Psi(na);
  for (int ai = 0; ai < na; ++ai)
    Psi[ai] = Eigen::VectorXd::Zero(op.grid(ai).npoints());

  StationaryProfile prof;
  prof.mu_s = mu_s;
  prof.V = V;

  double prev_delta = -1;
  CoefficientChain ch;
  bool converged = false;
  int n = 0;
  for (; n < opt.max_iter; ++n) {
    ch = coefficient_chain(net, Psi, V, mu_s, opt.chain);
    std::vector<Eigen::VectorXd> src(na);
    for (int ai = 0; ai < na; ++ai)
      src[ai] = net.arcs[ai].par.production *
                ch.U[ai].segment(1, op.grid(ai).cells);
    double rel = 0;
    Eigen::VectorXd x = op.solve_raw(op.load(src, P), &rel);
    EllipticSolution sol = op.unpack(x, rel);

    std::vector<Eigen::VectorXd> diff(na);
    for (int ai = 0; ai < na; ++ai) diff[ai] = sol.psi[ai] - Psi[ai];
    const double delta = h1_norm_ext(net, diff);
    if (prev_delta >= 0 && prev_delta > 0)
      prof.contraction.push_back(delta / prev_delta);
    prev_delta = delta;
    for (int ai = 0; ai < na; ++ai) Psi[ai] = sol.psi[ai];

    const double scale = std::max(1.0, h1_norm_ext(net, Psi));
    if (delta <= opt.tol * scale) {
      converged = true;
      ++n;
      break;
    }
  }
  if (!converged) {
    const bool expanding = !prof.contraction.empty() && prof.contraction.back() >= 1.0;
    throw StationaryError(expanding ? "no contraction - data too large"
                                    : "fixed point did not converge within max_iter",
                          prof.contraction);
  }

  // Final pairing: U from the converged Psi, then one more elliptic solve so
  // the stored (U, Psi) satisfy the discrete elliptic block exactly.
  ch = coefficient_chain(net, Psi, V, mu_s, opt.chain);
  std::vector<Eigen::VectorXd> src(na);
  for (int ai = 0; ai < na; ++ai)
    src[ai] = net.arcs[ai].par.production * ch.U[ai].segment(1, op.grid(ai).cells);
  double rel = 0;
  Eigen::VectorXd x = op.solve_raw(op.load(src, P), &rel);
  EllipticSolution sol = op.unpack(x, rel);

  prof.converged = true;
  prof.iterations = n;
  prof.U = ch.U;
  prof.C = ch.C;
  prof.Psi = sol.psi;
  double umin = std::numeric_limits<double>::infinity();
  for (int ai = 0; ai < na; ++ai) umin = std::min(umin, prof.U[ai].minCoeff());
  prof.u_nonnegative = umin >= -1e-10;
  prof.residuals = residual_report(prof, net, bc);
  return prof;
}

StationaryResiduals residual_report(const StationaryProfile& p, const Network& net,
                                    const BoundarySpec& bc) {
  StationaryResiduals r;
  const int na = static_cast<int>(net.arcs.size());
  double mass = 0;
  for (int ai = 0; ai < na; ++ai) {
    const Arc& arc = net.arcs[ai];
    const ArcGrid g{arc.par.length, arc.par.grid_cells};
    const double h = g.h();
    const auto& U = p.U[ai];
    const auto& Psi = p.Psi[ai];
    // Uniformly spaced interior triples only (p = 2 .. cells-1).
    for (int q = 2; q <= g.cells - 1; ++q) {
      const double psixx = (Psi(q + 1) - 2 * Psi(q) + Psi(q - 1)) / (h * h);
      const double ode = -arc.par.diffusion * psixx + arc.par.degradation * Psi(q) -
                         arc.par.production * U(q);
      r.max_psi_ode = std::max(r.max_psi_ode, std::fabs(ode));
      const double ux = (U(q + 1) - U(q - 1)) / (2 * h);
      const double psix = (Psi(q + 1) - Psi(q - 1)) / (2 * h);
      const double mom = arc.par.lambda * ux - U(q) * psix + arc.par.beta * p.V[ai];
      r.max_momentum_ode = std::max(r.max_momentum_ode, std::fabs(mom));
    }
    mass += trapezoid_weights(g).dot(U);
  }
  r.mass_error = std::fabs(mass - p.mu_s);

  EllipticSolution psi_sol;
  psi_sol.psi = p.Psi;
  for (const auto& node : net.internal_nodes) {
    const int m = static_cast<int>(node.incident.size());
    std::vector<double> Uend(m), Pend(m), Pflux(m);
    for (int i = 0; i < m; ++i) {
      const int ai = net.arc_index(node.incident[i]);
      const ArcGrid g{net.arcs[ai].par.length, net.arcs[ai].par.grid_cells};
      const int side = net.delta(node.id, node.incident[i]) > 0 ? 1 : 0;
      const int pi = side == 0 ? 0 : g.npoints() - 1;
      Uend[i] = p.U[ai](pi);
      Pend[i] = p.Psi[ai](pi);
      Pflux[i] = net.delta(node.id, node.incident[i]) * net.arcs[ai].par.diffusion *
                 psi_sol.endpoint_gradient(g, ai, side);
    }
    for (int i = 0; i < m; ++i) {
      const int ai = net.arc_index(node.incident[i]);
      double tc = -net.delta(node.id, node.incident[i]) * net.arcs[ai].par.lambda * p.V[ai];
      double kc = Pflux[i];
      for (int j = 0; j < m; ++j) {
        if (j == i) continue;
        tc -= node.sigma(i, j) * (Uend[j] - Uend[i]);
        kc -= node.alpha(i, j) * (Pend[j] - Pend[i]);
      }
      r.max_tc = std::max(r.max_tc, std::fabs(tc));
      r.max_kc = std::max(r.max_kc, std::fabs(kc));
    }
  }
  for (size_t j = 0; j < net.external_nodes.size(); ++j) {
    const auto& ex = net.external_nodes[j];
    const int ai = net.arc_index(ex.arc);
    const ArcGrid g{net.arcs[ai].par.length, net.arcs[ai].par.grid_cells};
    const int side = ex.eta > 0 ? 1 : 0;
    const int pi = side == 0 ? 0 : g.npoints() - 1;
    const double grad = psi_sol.endpoint_gradient(g, ai, side);
    const double robin = ex.eta * net.arcs[ai].par.diffusion * grad +
                         ex.robin_d * p.Psi[ai](pi) - bc.at(ex.id).P.inf;
    r.max_robin = std::max(r.max_robin, std::fabs(robin));
    const double wflux =
        ex.eta * net.arcs[ai].par.lambda * p.V[ai] - bc.at(ex.id).W.inf;
    r.max_wflux = std::max(r.max_wflux, std::fabs(wflux));
  }
  return r;
}

StationaryProfile special_zero(const Network& net, const BoundarySpec& bc) {
  bc.validate(net);
  EllipticProblem prob;
  prob.net = &net;
  for (const auto& a : net.arcs) {
    prob.reaction.push_back(a.par.degradation);
    prob.source.emplace_back(Eigen::VectorXd::Zero(a.par.grid_cells));
  }
  for (const auto& ex : net.external_nodes) prob.robin_rhs.push_back(bc.at(ex.id).P.inf);
  EllipticSolution sol = solve(prob);

  StationaryProfile p;
  const int na = static_cast<int>(net.arcs.size());
  p.mu_s = 0;
  p.converged = true;
  p.u_nonnegative = true;
  p.iterations = 1;
  p.V.assign(na, 0.0);
  p.C.assign(na, 0.0);
  p.Psi = sol.psi;
  p.U.resize(na);
  for (int ai = 0; ai < na; ++ai)
    p.U[ai] = Eigen::VectorXd::Zero(sol.psi[ai].size());
  p.residuals = residual_report(p, net, bc);
  return p;
}

StationaryProfile special_constant(const Network& net, const BoundarySpec& bc, double mu_s) {
  bc.validate(net);
  const double r0 = net.arcs.front().par.production / net.arcs.front().par.degradation;
  for (const auto& a : net.arcs) {
    const double ri = a.par.production / a.par.degradation;
    if (std::fabs(ri - r0) > 1e-12 * std::max(1.0, std::fabs(r0)))
      throw StationaryError("matched-data clause 1 violated: a_i/b_i is not constant (arc " +
                            std::to_string(a.id) + ")");
  }
  const double level = r0 * mu_s / net.total_length();
  for (const auto& ex : net.external_nodes) {
    const ExitData& e = bc.at(ex.id);
    if (e.W.inf != 0 || e.W.amp != 0)
      throw StationaryError("matched-data conditions violated: W_j must vanish at exit " + std::to_string(ex.id));
    const bool pz = e.P.inf == 0, dz = ex.robin_d == 0;
    if (pz != dz)
      throw StationaryError("matched-data clause 2 violated: P_j = 0 iff d_j = 0 fails at exit " +
                            std::to_string(ex.id));
    if (!dz && std::fabs(e.P.inf / ex.robin_d - level) > 1e-12 * std::max(1.0, std::fabs(level)))
      throw StationaryError("matched-data clause 3 violated: P_j/d_j != r mu_s/|A| at exit " +
                            std::to_string(ex.id));
  }

  StationaryProfile p;
  const int na = static_cast<int>(net.arcs.size());
  const double u0 = mu_s / net.total_length();
  p.mu_s = mu_s;
  p.converged = true;
  p.u_nonnegative = u0 >= -1e-10;
  p.iterations = 1;
  p.V.assign(na, 0.0);
  p.U.resize(na);
  p.Psi.resize(na);
  p.C.resize(na);
  for (int ai = 0; ai < na; ++ai) {
    const ArcGrid g{net.arcs[ai].par.length, net.arcs[ai].par.grid_cells};
    p.U[ai] = Eigen::VectorXd::Constant(g.npoints(), u0);
    p.Psi[ai] = Eigen::VectorXd::Constant(g.npoints(), level);
    p.C[ai] = u0 * std::exp(-level / net.arcs[ai].par.lambda);
  }
  p.residuals = residual_report(p, net, bc);
  return p;
}

MuThresholds mu_thresholds(const Network& net, const BoundarySpec& bc, double mu_s,
                           double K2bar) {
  if (!(K2bar > 0)) throw std::invalid_argument("K2bar must be > 0");
  std::vector<double> W(net.external_nodes.size());
  double sumP = 0;
  for (size_t j = 0; j < net.external_nodes.size(); ++j) {
    W[j] = bc.at(net.external_nodes[j].id).W.inf;
    sumP += std::fabs(bc.at(net.external_nodes[j].id).P.inf);
  }
  std::vector<double> V = compute_V(net, W);

  double beta_max = 0, lambda_min = std::numeric_limits<double>::infinity(), a_max = 0;
  for (const auto& a : net.arcs) {
    beta_max = std::max(beta_max, a.par.beta);
    lambda_min = std::min(lambda_min, a.par.lambda);
    a_max = std::max(a_max, a.par.production);
  }
  const double A = net.total_length();
  const double gamma = net.internal_nodes.empty() ? 0.0 : gamma_max(net);
  double sumV = 0;
  for (double v : V) sumV += std::fabs(v);

  MuThresholds out;
  out.omega = std::fabs(mu_s) + 2 * A * ((2 * beta_max / lambda_min) * A + 3 * gamma) * sumV;
  const double X = 1 - (4 * A * K2bar / lambda_min) * sumP;
  out.cond1 = X > 0;
  if (a_max == 0) {
    out.cond2 = out.cond1;  // the barrier is unbounded without production
    return out;
  }
  const double barrier = lambda_min / (16 * A * K2bar * a_max) * X * X;
  out.cond2 = out.cond1 && out.omega < barrier;
  if (out.cond1 && out.cond2) {
    const double disc = std::sqrt(X * X - 16 * A * out.omega * K2bar * a_max / lambda_min);
    const double pref = lambda_min / (8 * A * K2bar * a_max);
    out.mu_minus = pref * (X - disc);
    out.mu_plus = pref * (X + disc);
  }
  return out;
}

}  // namespace netchemo

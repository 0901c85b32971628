#include "netchemo/shooting.hpp"

#include <Eigen/Dense>
#include <cmath>

namespace netchemo {

namespace {

struct ArcIntegration {
  // Samples on the fine uniform grid, x_k = k * step, k = 0..nfine.
  Eigen::VectorXd psi, phi, bigk;  // Psi, Psi', int_0^x exp(-Psi/lambda)
  double step = 0;
  int nfine = 0;
  double mass = 0;  // trapezoid of U over the arc

  double u_at(int k, double C, double V, double lambda, double beta) const {
    return std::exp(psi(k) / lambda) * (C - (beta / lambda) * V * bigk(k));
  }
};

// RK4 on (Psi, Phi, K):  Psi' = Phi,  Phi' = (b Psi - a U)/D,  K' = e^{-Psi/lambda}.
ArcIntegration integrate_arc(const ArcParams& par, double psi0, double phi0, double C,
                             double V, int refine) {
  ArcIntegration out;
  out.nfine = 2 * par.grid_cells * refine;
  out.step = par.length / out.nfine;
  out.psi.resize(out.nfine + 1);
  out.phi.resize(out.nfine + 1);
  out.bigk.resize(out.nfine + 1);

  auto rhs = [&](double y0, double y1, double y2, double* d) {
    const double u = std::exp(y0 / par.lambda) * (C - (par.beta / par.lambda) * V * y2);
    d[0] = y1;
    d[1] = (par.degradation * y0 - par.production * u) / par.diffusion;
    d[2] = std::exp(-y0 / par.lambda);
  };

  double y[3] = {psi0, phi0, 0.0};
  out.psi(0) = y[0];
  out.phi(0) = y[1];
  out.bigk(0) = y[2];
  for (int k = 0; k < out.nfine; ++k) {
    double k1[3], k2[3], k3[3], k4[3];
    const double h = out.step;
    rhs(y[0], y[1], y[2], k1);
    rhs(y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1], y[2] + 0.5 * h * k1[2], k2);
    rhs(y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1], y[2] + 0.5 * h * k2[2], k3);
    rhs(y[0] + h * k3[0], y[1] + h * k3[1], y[2] + h * k3[2], k4);
    for (int c = 0; c < 3; ++c) y[c] += h / 6.0 * (k1[c] + 2 * k2[c] + 2 * k3[c] + k4[c]);
    out.psi(k + 1) = y[0];
    out.phi(k + 1) = y[1];
    out.bigk(k + 1) = y[2];
  }
  out.mass = 0;
  for (int k = 0; k < out.nfine; ++k)
    out.mass += 0.5 * out.step *
                (out.u_at(k, C, V, par.lambda, par.beta) +
                 out.u_at(k + 1, C, V, par.lambda, par.beta));
  return out;
}

}  // namespace

StationaryProfile shooting_oracle(const Network& net, const BoundarySpec& bc, double mu_s,
                                  const ShootingOptions& opt) {
  if (!net.acyclic) throw StationaryError("shooting_oracle requires an acyclic network");
  if (net.arcs.size() > 3)
    throw StationaryError("shooting_oracle is limited to networks with at most 3 arcs");
  bc.validate(net);

  const int na = static_cast<int>(net.arcs.size());
  std::vector<double> W(net.external_nodes.size());
  for (size_t j = 0; j < net.external_nodes.size(); ++j)
    W[j] = bc.at(net.external_nodes[j].id).W.inf;
  const std::vector<double> V = compute_V(net, W);

  const int n = 3 * na;  // (Psi(0), Psi'(0), C) per arc
  auto integrate_all = [&](const Eigen::VectorXd& y) {
    std::vector<ArcIntegration> arcs(na);
    for (int ai = 0; ai < na; ++ai)
      arcs[ai] = integrate_arc(net.arcs[ai].par, y(3 * ai), y(3 * ai + 1), y(3 * ai + 2),
                               V[ai], opt.refine);
    return arcs;
  };

  auto residual = [&](const Eigen::VectorXd& y) {
    std::vector<ArcIntegration> arcs = integrate_all(y);
    Eigen::VectorXd F(n);
    int row = 0;
    auto end_vals = [&](int ai, int side, double* psi, double* phi, double* u) {
      const int k = side == 0 ? 0 : arcs[ai].nfine;
      *psi = arcs[ai].psi(k);
      *phi = arcs[ai].phi(k);
      *u = arcs[ai].u_at(k, y(3 * ai + 2), V[ai], net.arcs[ai].par.lambda,
                         net.arcs[ai].par.beta);
    };
    for (size_t j = 0; j < net.external_nodes.size(); ++j) {
      const auto& ex = net.external_nodes[j];
      const int ai = net.arc_index(ex.arc);
      double psi, phi, u;
      end_vals(ai, ex.eta > 0 ? 1 : 0, &psi, &phi, &u);
      F(row++) = ex.eta * net.arcs[ai].par.diffusion * phi + ex.robin_d * psi -
                 bc.at(ex.id).P.inf;
    }
    for (const auto& node : net.internal_nodes) {
      const int m = static_cast<int>(node.incident.size());
      if (node.pivot < 0)
        throw StationaryError("condition (nd) violated at node " + std::to_string(node.id));
      std::vector<double> psi(m), phi(m), u(m);
      for (int i = 0; i < m; ++i) {
        const int ai = net.arc_index(node.incident[i]);
        end_vals(ai, net.delta(node.id, node.incident[i]) > 0 ? 1 : 0, &psi[i], &phi[i],
                 &u[i]);
      }
      for (int i = 0; i < m; ++i) {
        const int ai = net.arc_index(node.incident[i]);
        double kc = net.delta(node.id, node.incident[i]) * net.arcs[ai].par.diffusion * phi[i];
        for (int j = 0; j < m; ++j)
          if (j != i) kc -= node.alpha(i, j) * (psi[j] - psi[i]);
        F(row++) = kc;
      }
      const int k = node.local_index(node.pivot);
      for (int i = 0; i < m; ++i) {
        if (i == k) continue;  // the pivot row is the dependent one
        const int ai = net.arc_index(node.incident[i]);
        double tc = -net.delta(node.id, node.incident[i]) * net.arcs[ai].par.lambda * V[ai];
        for (int j = 0; j < m; ++j)
          if (j != i) tc -= node.sigma(i, j) * (u[j] - u[i]);
        F(row++) = tc;
      }
    }
    double mass = 0;
    for (const auto& a : arcs) mass += a.mass;
    F(row++) = mass - mu_s;
    if (row != n) throw std::logic_error("shooting system is not square");
    return F;
  };

  Eigen::VectorXd y = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd F = residual(y);
  double fnorm = F.lpNorm<Eigen::Infinity>();
  for (int it = 0; it < opt.max_newton && fnorm > opt.tol; ++it) {
    Eigen::MatrixXd Jac(n, n);
    for (int c = 0; c < n; ++c) {
      const double eps = 1e-7 * std::max(1.0, std::fabs(y(c)));
      Eigen::VectorXd yp = y, ym = y;
      yp(c) += eps;
      ym(c) -= eps;
      Jac.col(c) = (residual(yp) - residual(ym)) / (2 * eps);
    }
    Eigen::VectorXd step = Jac.fullPivLu().solve(-F);
    if (!step.allFinite()) throw StationaryError("root-finder divergence (singular Jacobian)");
    double damp = 1.0;
    for (; damp >= 1.0 / 64; damp *= 0.5) {
      Eigen::VectorXd yt = y + damp * step;
      Eigen::VectorXd Ft = residual(yt);
      const double fn = Ft.lpNorm<Eigen::Infinity>();
      if (fn < fnorm || fn <= opt.tol) {
        y = yt;
        F = Ft;
        fnorm = fn;
        break;
      }
    }
    if (damp < 1.0 / 64) throw StationaryError("root-finder divergence (no descent)");
  }
  if (fnorm > opt.tol)
    throw StationaryError("root-finder divergence (residual " + std::to_string(fnorm) + ")");

  std::vector<ArcIntegration> arcs = integrate_all(y);
  StationaryProfile p;
  p.mu_s = mu_s;
  p.V = V;
  p.converged = true;
  p.iterations = 0;
  p.U.resize(na);
  p.Psi.resize(na);
  p.C.resize(na);
  double umin = std::numeric_limits<double>::infinity();
  for (int ai = 0; ai < na; ++ai) {
    p.C[ai] = y(3 * ai + 2);
    const ArcGrid g{net.arcs[ai].par.length, net.arcs[ai].par.grid_cells};
    p.U[ai].resize(g.npoints());
    p.Psi[ai].resize(g.npoints());
    // Extended grid points sit on the fine grid: multiples of h/2.
    for (int q = 0; q < g.npoints(); ++q) {
      const double x = g.point(q);
      const int k = static_cast<int>(std::llround(x / arcs[ai].step));
      p.Psi[ai](q) = arcs[ai].psi(k);
      p.U[ai](q) = arcs[ai].u_at(k, p.C[ai], V[ai], net.arcs[ai].par.lambda,
                                 net.arcs[ai].par.beta);
      umin = std::min(umin, p.U[ai](q));
    }
  }
  p.u_nonnegative = umin >= -1e-10;
  p.residuals = residual_report(p, net, bc);
  return p;
}

}  // namespace netchemo

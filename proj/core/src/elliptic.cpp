#include "netchemo/elliptic.hpp"

#include <cmath>
#include <sstream>

namespace netchemo {

double EllipticSolution::eval(const ArcGrid& g, int arc_index, double x) const {
  const Eigen::VectorXd& p = psi[arc_index];
  const int n = g.npoints();
  if (x <= 0) return p(0);
  if (x >= g.length) return p(n - 1);
  // Locate the P1 element containing x on the nonuniform point set.
  int hi = 1;
  while (hi < n - 1 && g.point(hi) < x) ++hi;
  double x0 = g.point(hi - 1), x1 = g.point(hi);
  double t = (x - x0) / (x1 - x0);
  return (1 - t) * p(hi - 1) + t * p(hi);
}

double EllipticSolution::endpoint_gradient(const ArcGrid& g, int arc_index, int side) const {
  const Eigen::VectorXd& p = psi[arc_index];
  const double h = g.h();
  // Three-point one-sided difference on spacings (h/2, h); exact for quadratics.
  if (side == 0) return (-8.0 * p(0) + 9.0 * p(1) - p(2)) / (3.0 * h);
  const int n = static_cast<int>(p.size());
  return (8.0 * p(n - 1) - 9.0 * p(n - 2) + p(n - 3)) / (3.0 * h);
}

EllipticOperator::EllipticOperator(const Network& net, std::vector<double> reaction)
    : net_(&net), reaction_(std::move(reaction)) {
  const int na = static_cast<int>(net.arcs.size());
  if (static_cast<int>(reaction_.size()) != na)
    throw std::invalid_argument("reaction size does not match the arc count");
  offsets_.resize(na);
  n_ = 0;
  for (int i = 0; i < na; ++i) {
    offsets_[i] = n_;
    n_ += net.arcs[i].par.grid_cells + 2;
  }

  std::vector<Eigen::Triplet<double>> ta, tm;
  for (int ai = 0; ai < na; ++ai) {
    const Arc& arc = net.arcs[ai];
    const ArcGrid g = grid(ai);
    const double c = reaction_[ai];
    if (!(c > 0)) throw std::invalid_argument("reaction must be > 0 on arc " +
                                              std::to_string(arc.id));
    const int np = g.npoints();
    for (int e = 0; e + 1 < np; ++e) {
      const double len = g.point(e + 1) - g.point(e);
      const double k = arc.par.diffusion / len;
      const double m = len / 6.0;
      const int p0 = dof(ai, e), p1 = dof(ai, e + 1);
      ta.emplace_back(p0, p0, k + c * 2 * m);
      ta.emplace_back(p1, p1, k + c * 2 * m);
      ta.emplace_back(p0, p1, -k + c * m);
      ta.emplace_back(p1, p0, -k + c * m);
      tm.emplace_back(p0, p0, 2 * m);
      tm.emplace_back(p1, p1, 2 * m);
      tm.emplace_back(p0, p1, m);
      tm.emplace_back(p1, p0, m);
    }
  }
  // Kedem-Katchalsky penalties couple the duplicated endpoint values.
  for (const auto& node : net.internal_nodes) {
    const int m = static_cast<int>(node.incident.size());
    for (int i = 0; i < m; ++i) {
      const int ai = net.arc_index(node.incident[i]);
      const int side = net.delta(node.id, node.incident[i]) > 0 ? 1 : 0;
      const int pi = dof(ai, side == 0 ? 0 : grid(ai).npoints() - 1);
      for (int j = 0; j < m; ++j) {
        if (j == i || node.alpha(i, j) == 0) continue;
        const int aj = net.arc_index(node.incident[j]);
        const int sj = net.delta(node.id, node.incident[j]) > 0 ? 1 : 0;
        const int pj = dof(aj, sj == 0 ? 0 : grid(aj).npoints() - 1);
        ta.emplace_back(pi, pi, node.alpha(i, j));
        ta.emplace_back(pi, pj, -node.alpha(i, j));
      }
    }
  }
  for (const auto& ex : net.external_nodes) {
    if (ex.robin_d == 0) continue;
    const int ai = net.arc_index(ex.arc);
    const int p = dof(ai, ex.eta > 0 ? grid(ai).npoints() - 1 : 0);
    ta.emplace_back(p, p, ex.robin_d);
  }

  A_.resize(n_, n_);
  A_.setFromTriplets(ta.begin(), ta.end());
  M_.resize(n_, n_);
  M_.setFromTriplets(tm.begin(), tm.end());
  fact_.compute(A_);
  if (fact_.info() != Eigen::Success)
    throw std::runtime_error("elliptic factorization failed (internal error)");
}

ArcGrid EllipticOperator::grid(int arc_index) const {
  const Arc& a = net_->arcs[arc_index];
  return ArcGrid{a.par.length, a.par.grid_cells};
}

Eigen::VectorXd EllipticOperator::load(const std::vector<Eigen::VectorXd>& cell_source,
                                       const std::vector<double>& robin_rhs) const {
  Eigen::VectorXd f = Eigen::VectorXd::Zero(n_);
  const int na = static_cast<int>(net_->arcs.size());
  for (int ai = 0; ai < na; ++ai) {
    const ArcGrid g = grid(ai);
    const int C = g.cells;
    const Eigen::VectorXd& s = cell_source[ai];
    if (s.size() != C) throw std::invalid_argument("source grid size mismatch");
    const double h = g.h();
    // Exact overlaps of the cells with the P1 hats.
    f(dof(ai, 0)) += s(0) * h / 4;
    f(dof(ai, 1)) += s(0) * 5 * h / 8 + s(1) * h / 8;
    for (int p = 2; p <= C - 1; ++p) {
      const int c = p - 1;
      f(dof(ai, p)) += (s(c - 1) + s(c + 1)) * h / 8 + s(c) * 3 * h / 4;
    }
    f(dof(ai, C)) += s(C - 1) * 5 * h / 8 + s(C - 2) * h / 8;
    f(dof(ai, C + 1)) += s(C - 1) * h / 4;
  }
  if (robin_rhs.size() != net_->external_nodes.size())
    throw std::invalid_argument("robin_rhs size mismatch");
  for (size_t j = 0; j < robin_rhs.size(); ++j) {
    const auto& ex = net_->external_nodes[j];
    const int ai = net_->arc_index(ex.arc);
    const int p = dof(ai, ex.eta > 0 ? grid(ai).npoints() - 1 : 0);
    f(p) += robin_rhs[j];
  }
  return f;
}

Eigen::VectorXd EllipticOperator::mass_times(const std::vector<Eigen::VectorXd>& p1_field) const {
  Eigen::VectorXd x(n_);
  for (size_t ai = 0; ai < net_->arcs.size(); ++ai) {
    if (p1_field[ai].size() != grid(static_cast<int>(ai)).npoints())
      throw std::invalid_argument("p1 field size mismatch");
    x.segment(offsets_[ai], p1_field[ai].size()) = p1_field[ai];
  }
  return M_ * x;
}

Eigen::VectorXd EllipticOperator::solve_raw(const Eigen::VectorXd& rhs,
                                            double* rel_residual) const {
  Eigen::VectorXd x = fact_.solve(rhs);
  if (fact_.info() != Eigen::Success)
    throw std::runtime_error("elliptic solve failed (internal error)");
  if (rel_residual) {
    // Backward error |Ax - b| / (|A| |x| + |b|), stable under large penalties.
    double anorm = 0;
    for (int k = 0; k < A_.outerSize(); ++k) {
      double row = 0;
      for (SpMat::InnerIterator it(A_, k); it; ++it) row += std::fabs(it.value());
      anorm = std::max(anorm, row);
    }
    const double denom = anorm * x.lpNorm<Eigen::Infinity>() + rhs.lpNorm<Eigen::Infinity>();
    *rel_residual =
        denom == 0 ? 0.0 : (A_ * x - rhs).lpNorm<Eigen::Infinity>() / denom;
  }
  return x;
}

EllipticSolution EllipticOperator::unpack(const Eigen::VectorXd& x, double rel_residual) const {
  EllipticSolution sol;
  sol.algebraic_residual = rel_residual;
  const int na = static_cast<int>(net_->arcs.size());
  sol.psi.resize(na);
  sol.psi_x.resize(na);
  for (int ai = 0; ai < na; ++ai) {
    const ArcGrid g = grid(ai);
    const int C = g.cells;
    sol.psi[ai] = x.segment(offsets_[ai], C + 2);
    Eigen::VectorXd& px = sol.psi_x[ai];
    px.resize(C);
    const Eigen::VectorXd& p = sol.psi[ai];
    const double h = g.h();
    auto face = [&](int f) -> double {
      if (f == 0) return p(0);
      if (f == C) return p(C + 1);
      return 0.5 * (p(f) + p(f + 1));
    };
    for (int c = 0; c < C; ++c) px(c) = (face(c + 1) - face(c)) / h;
  }
  return sol;
}

SpMat assemble(const EllipticProblem& prob) {
  EllipticOperator op(*prob.net, prob.reaction);
  return op.matrix();
}

EllipticSolution solve(const EllipticProblem& prob) {
  EllipticOperator op(*prob.net, prob.reaction);
  Eigen::VectorXd rhs = op.load(prob.source, prob.robin_rhs);
  double rel = 0;
  Eigen::VectorXd x = op.solve_raw(rhs, &rel);
  if (rel > 1e-12)
    throw std::runtime_error("elliptic relative residual " + std::to_string(rel) +
                             " above tolerance (internal error)");
  return op.unpack(x, rel);
}

TransmissionResiduals transmission_residual(const EllipticSolution& sol,
                                            const EllipticProblem& prob) {
  const Network& net = *prob.net;
  TransmissionResiduals out;
  for (const auto& node : net.internal_nodes) {
    NodeFluxResidual r;
    r.node = node.id;
    const int m = static_cast<int>(node.incident.size());
    std::vector<double> flux(m), trace(m);
    for (int i = 0; i < m; ++i) {
      const int ai = net.arc_index(node.incident[i]);
      const ArcGrid g{net.arcs[ai].par.length, net.arcs[ai].par.grid_cells};
      const int side = net.delta(node.id, node.incident[i]) > 0 ? 1 : 0;
      trace[i] = sol.endpoint(ai, side);
      flux[i] = net.delta(node.id, node.incident[i]) * net.arcs[ai].par.diffusion *
                sol.endpoint_gradient(g, ai, side);
    }
    double flux_sum = 0;
    for (int i = 0; i < m; ++i) {
      double coupling = 0;
      for (int j = 0; j < m; ++j)
        if (j != i) coupling += node.alpha(i, j) * (trace[j] - trace[i]);
      r.max_kc_residual = std::max(r.max_kc_residual, std::fabs(flux[i] - coupling));
      flux_sum += flux[i];
    }
    r.flux_sum = std::fabs(flux_sum);
    out.max_kc_residual = std::max(out.max_kc_residual, r.max_kc_residual);
    out.max_flux_sum = std::max(out.max_flux_sum, r.flux_sum);
    out.nodes.push_back(r);
  }
  for (size_t j = 0; j < net.external_nodes.size(); ++j) {
    const auto& ex = net.external_nodes[j];
    const int ai = net.arc_index(ex.arc);
    const ArcGrid g{net.arcs[ai].par.length, net.arcs[ai].par.grid_cells};
    const int side = ex.eta > 0 ? 1 : 0;
    double grad = sol.endpoint_gradient(g, ai, side);
    double val = sol.endpoint(ai, side);
    double res = ex.eta * net.arcs[ai].par.diffusion * grad + ex.robin_d * val -
                 prob.robin_rhs[j];
    out.max_robin_residual = std::max(out.max_robin_residual, std::fabs(res));
  }
  return out;
}

std::string matrix_triplets(const SpMat& m) {
  std::ostringstream os;
  os.precision(17);
  for (int k = 0; k < m.outerSize(); ++k)
    for (SpMat::InnerIterator it(m, k); it; ++it)
      os << it.row() << " " << it.col() << " " << it.value() << "\n";
  return os.str();
}

}  // namespace netchemo

#include "netchemo/dynamics.hpp"

#include <array>
#include <cmath>
#include <cstring>
#include <limits>

namespace netchemo {

Eigen::VectorXd SimState::psi_p1(int arc_index) const {
  const Eigen::VectorXd& c = psi[arc_index];
  Eigen::VectorXd p(c.size() + 2);
  p(0) = psi_end0[arc_index];
  p.segment(1, c.size()) = c;
  p(p.size() - 1) = psi_endL[arc_index];
  return p;
}

Stepper::Stepper(const Network& net, const BoundarySpec& bc) : net_(&net), bc_(bc) {
  bc_.validate(net);
  for (const auto& node : net.internal_nodes) {
    couplers_.emplace_back(net, node);
    node_condition_.push_back(couplers_.back().condition_number());
  }
}

double Stepper::default_dt() const {
  double dt = std::numeric_limits<double>::infinity();
  for (const auto& a : net_->arcs) {
    const double h = a.par.length / a.par.grid_cells;
    dt = std::min(dt, std::min(0.9 * h / a.par.lambda, h));
  }
  return dt;
}

const EllipticOperator& Stepper::op_for_dt(double dt) const {
  long long key;
  static_assert(sizeof(key) == sizeof(dt));
  std::memcpy(&key, &dt, sizeof(key));
  auto it = ops_.find(key);
  if (it == ops_.end()) {
    std::vector<double> reaction;
    for (const auto& a : net_->arcs) reaction.push_back(a.par.degradation + 1.0 / dt);
    it = ops_.emplace(key, std::make_shared<EllipticOperator>(*net_, reaction)).first;
  }
  return *it->second;
}

void Stepper::parabolic_step(SimState& state, double dt) const {
  const EllipticOperator& op = op_for_dt(dt);
  const int na = static_cast<int>(net_->arcs.size());

  std::vector<Eigen::VectorXd> p1(na), src(na);
  for (int ai = 0; ai < na; ++ai) {
    p1[ai] = state.psi_p1(ai);
    src[ai] = net_->arcs[ai].par.production * state.u[ai];
  }
  std::vector<double> robin(net_->external_nodes.size());
  for (size_t j = 0; j < robin.size(); ++j)
    robin[j] = bc_.at(net_->external_nodes[j].id).P.value(state.t + dt);

  Eigen::VectorXd rhs = op.mass_times(p1) / dt + op.load(src, robin);
  double rel = 0;
  Eigen::VectorXd x = op.solve_raw(rhs, &rel);
  EllipticSolution sol = op.unpack(x, rel);
  for (int ai = 0; ai < na; ++ai) {
    const int C = net_->arcs[ai].par.grid_cells;
    state.psi_end0[ai] = sol.psi[ai](0);
    state.psi_endL[ai] = sol.psi[ai](C + 1);
    state.psi[ai] = sol.psi[ai].segment(1, C);
    state.psi_x[ai] = sol.psi_x[ai];
  }
}

void Stepper::hyperbolic_step(SimState& state, double dt) {
  const int na = static_cast<int>(net_->arcs.size());
  double cfl = 0;
  for (const auto& a : net_->arcs)
    cfl = std::max(cfl, a.par.lambda * dt / (a.par.length / a.par.grid_cells));
  if (cfl > 1.0 + 1e-12)
    throw std::runtime_error("CFL violation: lambda dt / h = " + std::to_string(cfl));

  const double t_half = state.t + 0.5 * dt;

  // Trace state (u*, v*) per arc endpoint; x=0 side first, x=L side second.
  std::vector<std::array<double, 2>> trace_u(na), trace_v(na);
  auto outgoing = [&](int ai, int side) {
    const auto& u = state.u[ai];
    const auto& v = state.v[ai];
    const int C = static_cast<int>(u.size());
    return side == 0 ? u(0) - v(0) : u(C - 1) + v(C - 1);
  };

  last_flux_residual_ = 0;
  last_flux_rel_ = 0;
  last_dissipation_gap_ = 0;
  last_dissipation_rel_ = 0;
  for (size_t ni = 0; ni < net_->internal_nodes.size(); ++ni) {
    const InternalNode& node = net_->internal_nodes[ni];
    const int m = static_cast<int>(node.incident.size());
    Eigen::VectorXd w(m);
    for (int i = 0; i < m; ++i) {
      const int ai = net_->arc_index(node.incident[i]);
      const int side = net_->delta(node.id, node.incident[i]) > 0 ? 1 : 0;
      w(i) = outgoing(ai, side);
    }
    NodeTraces tr = couplers_[ni].solve(w);
    for (int i = 0; i < m; ++i) {
      const int ai = net_->arc_index(node.incident[i]);
      const int side = net_->delta(node.id, node.incident[i]) > 0 ? 1 : 0;
      trace_u[ai][side] = tr.u(i);
      trace_v[ai][side] = tr.v(i);
    }
    last_flux_residual_ = std::max(last_flux_residual_, tr.flux_residual);
    if (tr.flux_scale > 0)
      last_flux_rel_ = std::max(last_flux_rel_, tr.flux_residual / tr.flux_scale);
    const double gap = std::fabs(tr.dissipation_lhs - tr.dissipation_rhs);
    last_dissipation_gap_ = std::max(last_dissipation_gap_, gap);
    if (tr.dissipation_scale > 0)
      last_dissipation_rel_ =
          std::max(last_dissipation_rel_, gap / tr.dissipation_scale);
    // The quadratic-form identity is algebraic; a visible defect means the
    // junction solve went wrong.
    if (gap > 1e-9 * tr.dissipation_scale)
      throw std::logic_error("junction dissipation identity violated at node " +
                             std::to_string(node.id));
  }
  for (const auto& ex : net_->external_nodes) {
    const int ai = net_->arc_index(ex.arc);
    const int side = ex.eta > 0 ? 1 : 0;
    const double W = bc_.at(ex.id).W.value(t_half);
    ExternalTrace tr = external_trace(ex.eta, net_->arcs[ai].par.lambda, W, outgoing(ai, side));
    trace_u[ai][side] = tr.u;
    trace_v[ai][side] = tr.v;
  }

  for (int ai = 0; ai < na; ++ai) {
    const Arc& arc = net_->arcs[ai];
    const int C = arc.par.grid_cells;
    const double h = arc.par.length / C;
    const double nu = arc.par.lambda * dt / h;
    Eigen::VectorXd& u = state.u[ai];
    Eigen::VectorXd& v = state.v[ai];

    // Face states: upwind characteristics inside, junction traces at the ends.
    Eigen::VectorXd uf(C + 1), vf(C + 1);
    uf(0) = trace_u[ai][0];
    vf(0) = trace_v[ai][0];
    uf(C) = trace_u[ai][1];
    vf(C) = trace_v[ai][1];
    for (int f = 1; f < C; ++f) {
      const double wp = u(f - 1) + v(f - 1);  // right-moving, from the left cell
      const double wm = u(f) - v(f);          // left-moving, from the right cell
      uf(f) = 0.5 * (wp + wm);
      vf(f) = 0.5 * (wp - wm);
    }
    for (int c = 0; c < C; ++c) {
      u(c) -= nu * (vf(c + 1) - vf(c));
      v(c) -= nu * (uf(c + 1) - uf(c));
    }
    // Relaxation -beta v by its exact factor; u psi_x explicit.
    const double decay = std::exp(-arc.par.beta * dt);
    const double gain = -std::expm1(-arc.par.beta * dt) / arc.par.beta;
    for (int c = 0; c < C; ++c)
      v(c) = decay * v(c) + gain * u(c) * state.psi_x[ai](c);
  }
}

StepReport Stepper::step(SimState& state, double dt) {
  parabolic_step(state, dt);
  hyperbolic_step(state, dt);
  state.t += dt;
  for (size_t j = 0; j < net_->external_nodes.size(); ++j)
    state.boundary_integrals[j] = bc_.at(net_->external_nodes[j].id).W.integral(state.t);

  StepReport rep;
  rep.dt = dt;
  for (const auto& a : net_->arcs)
    rep.cfl = std::max(rep.cfl, a.par.lambda * dt / (a.par.length / a.par.grid_cells));
  rep.node_condition = node_condition_;
  rep.max_node_flux_residual = last_flux_residual_;
  rep.max_node_flux_rel = last_flux_rel_;
  rep.max_dissipation_gap = last_dissipation_gap_;
  rep.max_dissipation_rel = last_dissipation_rel_;
  rep.mass_residual = mass_residual(state);
  return rep;
}

double Stepper::mass(const SimState& state) const {
  double m = 0;
  for (size_t ai = 0; ai < net_->arcs.size(); ++ai) {
    const double h = net_->arcs[ai].par.length / net_->arcs[ai].par.grid_cells;
    m += h * state.u[ai].sum();
  }
  return m;
}

double Stepper::mass_residual(const SimState& state) const {
  double out = 0;
  for (double b : state.boundary_integrals) out += b;
  return std::fabs(mass(state) - (state.mass0 - out));
}

SupBound Stepper::sup_bound_check(const SimState& state) const {
  if (gamma_ < 0) gamma_ = gamma_max(*net_);  // throws when (nd) fails

  const int na = static_cast<int>(net_->arcs.size());
  // Traces of the current state at the internal nodes.
  std::vector<std::array<double, 2>> tu(na), tv(na);
  std::vector<std::array<bool, 2>> has(na, {false, false});
  for (size_t ni = 0; ni < net_->internal_nodes.size(); ++ni) {
    const InternalNode& node = net_->internal_nodes[ni];
    const int m = static_cast<int>(node.incident.size());
    Eigen::VectorXd w(m);
    for (int i = 0; i < m; ++i) {
      const int ai = net_->arc_index(node.incident[i]);
      const int side = net_->delta(node.id, node.incident[i]) > 0 ? 1 : 0;
      const auto& u = state.u[ai];
      const auto& v = state.v[ai];
      const int C = static_cast<int>(u.size());
      w(i) = side == 0 ? u(0) - v(0) : u(C - 1) + v(C - 1);
    }
    NodeTraces tr = couplers_[ni].solve(w);
    for (int i = 0; i < m; ++i) {
      const int ai = net_->arc_index(node.incident[i]);
      const int side = net_->delta(node.id, node.incident[i]) > 0 ? 1 : 0;
      tu[ai][side] = tr.u(i);
      tv[ai][side] = tr.v(i);
      has[ai][side] = true;
    }
  }

  SupBound out;
  double sum_terms = 0;
  for (int ai = 0; ai < na; ++ai) {
    const auto& u = state.u[ai];
    const auto& v = state.v[ai];
    const int C = static_cast<int>(u.size());
    double tvar = 0;
    for (int c = 0; c + 1 < C; ++c) tvar += std::fabs(u(c + 1) - u(c));
    double vmax = v.cwiseAbs().maxCoeff();
    double umax = u.cwiseAbs().maxCoeff();
    if (has[ai][0]) {
      tvar += std::fabs(u(0) - tu[ai][0]);
      vmax = std::max(vmax, std::fabs(tv[ai][0]));
      umax = std::max(umax, std::fabs(tu[ai][0]));
    }
    if (has[ai][1]) {
      tvar += std::fabs(u(C - 1) - tu[ai][1]);
      vmax = std::max(vmax, std::fabs(tv[ai][1]));
      umax = std::max(umax, std::fabs(tu[ai][1]));
    }
    sum_terms += 2.0 * tvar + 3.0 * gamma_ * vmax;
    out.lhs = std::max(out.lhs, umax);
  }
  out.rhs = std::fabs(mass(state)) / net_->total_length() + 2.0 * sum_terms;
  return out;
}

SimState Stepper::make_state(const std::function<double(ArcId, double)>& u0,
                             const std::function<double(ArcId, double)>& v0,
                             const std::function<double(ArcId, double)>& psi0) const {
  SimState s;
  const int na = static_cast<int>(net_->arcs.size());
  s.u.resize(na);
  s.v.resize(na);
  s.psi.resize(na);
  s.psi_x.resize(na);
  s.psi_end0.resize(na);
  s.psi_endL.resize(na);
  for (int ai = 0; ai < na; ++ai) {
    const Arc& arc = net_->arcs[ai];
    const int C = arc.par.grid_cells;
    const double h = arc.par.length / C;
    s.u[ai].resize(C);
    s.v[ai].resize(C);
    s.psi[ai].resize(C);
    for (int c = 0; c < C; ++c) {
      const double x = (c + 0.5) * h;
      s.u[ai](c) = u0(arc.id, x);
      s.v[ai](c) = v0(arc.id, x);
      s.psi[ai](c) = psi0(arc.id, x);
    }
    s.psi_end0[ai] = psi0(arc.id, 0.0);
    s.psi_endL[ai] = psi0(arc.id, arc.par.length);
    Eigen::VectorXd p = s.psi_p1(ai);
    s.psi_x[ai].resize(C);
    auto face = [&](int f) {
      if (f == 0) return p(0);
      if (f == C) return p(C + 1);
      return 0.5 * (p(f) + p(f + 1));
    };
    for (int c = 0; c < C; ++c) s.psi_x[ai](c) = (face(c + 1) - face(c)) / h;
  }
  s.boundary_integrals.assign(net_->external_nodes.size(), 0.0);
  s.mass0 = mass(s);
  return s;
}

namespace {

double h1_sq(const Network& net, const std::vector<Eigen::VectorXd>& f,
             const std::vector<Eigen::VectorXd>& ref) {
  double s = 0;
  for (size_t ai = 0; ai < net.arcs.size(); ++ai) {
    const double h = net.arcs[ai].par.length / net.arcs[ai].par.grid_cells;
    Eigen::VectorXd d = f[ai] - ref[ai];
    s += h * d.squaredNorm();
    for (int c = 0; c + 1 < d.size(); ++c) {
      double g = (d(c + 1) - d(c)) / h;
      s += h * g * g;
    }
  }
  return s;
}

double h2_sq(const Network& net, const std::vector<Eigen::VectorXd>& f,
             const std::vector<Eigen::VectorXd>& ref) {
  double s = h1_sq(net, f, ref);
  for (size_t ai = 0; ai < net.arcs.size(); ++ai) {
    const double h = net.arcs[ai].par.length / net.arcs[ai].par.grid_cells;
    Eigen::VectorXd d = f[ai] - ref[ai];
    for (int c = 1; c + 1 < d.size(); ++c) {
      double g = (d(c + 1) - 2 * d(c) + d(c - 1)) / (h * h);
      s += h * g * g;
    }
  }
  return s;
}

double l2_sq(const Network& net, const std::vector<Eigen::VectorXd>& a,
             const std::vector<Eigen::VectorXd>& b, double scale) {
  double s = 0;
  for (size_t ai = 0; ai < net.arcs.size(); ++ai) {
    const double h = net.arcs[ai].par.length / net.arcs[ai].par.grid_cells;
    s += h * ((a[ai] - b[ai]) * scale).squaredNorm();
  }
  return s;
}

}  // namespace

double sup_distance(const SimState& s, const ReferenceFields& ref) {
  double d = 0;
  for (size_t ai = 0; ai < s.u.size(); ++ai) {
    d = std::max(d, (s.u[ai] - ref.u[ai]).cwiseAbs().maxCoeff());
    d = std::max(d, (s.v[ai] - ref.v[ai]).cwiseAbs().maxCoeff());
    d = std::max(d, (s.psi[ai] - ref.psi[ai]).cwiseAbs().maxCoeff());
  }
  return d;
}

double h1_distance(const Network& net, const SimState& s, const ReferenceFields& ref) {
  return std::sqrt(h1_sq(net, s.u, ref.u) + h1_sq(net, s.v, ref.v) +
                   h1_sq(net, s.psi, ref.psi));
}

double ft_functional(const Network& net, const std::vector<HistorySample>& history,
                     const ReferenceFields& ref) {
  if (history.size() < 2)
    throw std::invalid_argument("ft_functional needs at least two samples");
  double sup_u = 0, sup_v = 0, sup_psi = 0, integral = 0;

  std::vector<double> inst(history.size());
  for (size_t n = 0; n < history.size(); ++n) {
    const auto& s = history[n];
    double hu = h1_sq(net, s.u, ref.u);
    double hv = h1_sq(net, s.v, ref.v);
    double hp = h2_sq(net, s.psi, ref.psi);
    sup_u = std::max(sup_u, hu);
    sup_v = std::max(sup_v, hv);
    sup_psi = std::max(sup_psi, hp);
    inst[n] = hu + hv + hp;
  }
  for (size_t n = 0; n + 1 < history.size(); ++n) {
    const auto& s0 = history[n];
    const auto& s1 = history[n + 1];
    const double dt = s1.t - s0.t;
    // Trapezoid on the instantaneous norms, midpoint rectangles on the
    // finite-difference time derivatives.
    integral += 0.5 * dt * (inst[n] + inst[n + 1]);
    double vt = l2_sq(net, s1.v, s0.v, 1.0 / dt);
    double pt = l2_sq(net, s1.psi, s0.psi, 1.0 / dt);
    double pxt = 0;
    for (size_t ai = 0; ai < net.arcs.size(); ++ai) {
      const double h = net.arcs[ai].par.length / net.arcs[ai].par.grid_cells;
      Eigen::VectorXd d = (s1.psi[ai] - s0.psi[ai]) / dt;
      for (int c = 0; c + 1 < d.size(); ++c) {
        double g = (d(c + 1) - d(c)) / h;
        pxt += h * g * g;
      }
    }
    integral += dt * (vt + pt + pxt);
  }
  return std::sqrt(sup_u + sup_v + sup_psi + integral);
}

}  // namespace netchemo

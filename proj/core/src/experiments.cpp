#include "netchemo/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <random>
#include <set>

namespace netchemo {

namespace fs = std::filesystem;

void apply_overrides(Config& cfg, const Overrides& o) {
  if (o.tol) cfg.experiment.tol = *o.tol;
  if (o.t_final) cfg.experiment.t_final = *o.t_final;
  if (o.cells)
    for (auto& a : cfg.arcs) a.par.grid_cells = *o.cells;
}

ReferenceFields reference_fields(const Network& net, const StationaryProfile& p) {
  ReferenceFields ref;
  const int na = static_cast<int>(net.arcs.size());
  ref.u.resize(na);
  ref.v.resize(na);
  ref.psi.resize(na);
  for (int ai = 0; ai < na; ++ai) {
    ref.u[ai] = p.u_cells(ai);
    ref.psi[ai] = p.psi_cells(ai);
    ref.v[ai] = Eigen::VectorXd::Constant(net.arcs[ai].par.grid_cells, p.V[ai]);
  }
  return ref;
}

namespace {

void recompute_psi_x(const Network& net, SimState& s) {
  for (size_t ai = 0; ai < net.arcs.size(); ++ai) {
    const int C = net.arcs[ai].par.grid_cells;
    const double h = net.arcs[ai].par.length / C;
    Eigen::VectorXd p = s.psi_p1(static_cast<int>(ai));
    auto face = [&](int f) {
      if (f == 0) return p(0);
      if (f == C) return p(C + 1);
      return 0.5 * (p(f) + p(f + 1));
    };
    for (int c = 0; c < C; ++c) s.psi_x[ai](c) = (face(c + 1) - face(c)) / h;
  }
}

void add_perturbation(const Network& net, SimState& s, double amplitude, bool randomize,
                      unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> jitter(0.5, 1.5);
  for (size_t ai = 0; ai < net.arcs.size(); ++ai) {
    const double L = net.arcs[ai].par.length;
    const int C = net.arcs[ai].par.grid_cells;
    const double h = L / C;
    const double amp = randomize ? amplitude * jitter(rng) : amplitude;
    for (int c = 0; c < C; ++c) {
      const double x = (c + 0.5) * h;
      const double bump = std::sin(M_PI * x / L) * std::sin(M_PI * x / L);
      // The density bump is taken mean-free so the perturbed state keeps the
      // stationary mass; a net mass offset would persist forever under
      // conservative no-flux data and the state could not return to the
      // profile.
      s.u[ai](c) += amp * (bump - 0.5);
      s.psi[ai](c) += amp * bump;
    }
    // sin^2 vanishes at both endpoints; psi endpoint values are unchanged.
  }
  recompute_psi_x(net, s);
  s.mass0 = 0;
  for (size_t ai = 0; ai < net.arcs.size(); ++ai) {
    const double h = net.arcs[ai].par.length / net.arcs[ai].par.grid_cells;
    s.mass0 += h * s.u[ai].sum();
  }
}

}  // namespace

SimState profile_state(const Stepper& stepper, const StationaryProfile& p) {
  const Network& net = stepper.net();
  SimState s = stepper.make_state(
      [&](ArcId, double) { return 0.0; }, [&](ArcId, double) { return 0.0; },
      [&](ArcId, double) { return 0.0; });
  for (size_t ai = 0; ai < net.arcs.size(); ++ai) {
    s.u[ai] = p.u_cells(static_cast<int>(ai));
    s.v[ai].setConstant(p.V[ai]);
    s.psi[ai] = p.psi_cells(static_cast<int>(ai));
    s.psi_end0[ai] = p.Psi[ai](0);
    s.psi_endL[ai] = p.Psi[ai](p.Psi[ai].size() - 1);
  }
  recompute_psi_x(net, s);
  s.mass0 = stepper.mass(s);
  return s;
}

SimState initial_state(const Stepper& stepper, const Config& cfg,
                       const StationaryProfile* profile) {
  const Network& net = stepper.net();
  switch (cfg.initial.kind) {
    case InitialSpec::Kind::Zero:
      return stepper.make_state([](ArcId, double) { return 0.0; },
                                [](ArcId, double) { return 0.0; },
                                [](ArcId, double) { return 0.0; });
    case InitialSpec::Kind::PerArc: {
      auto field = [&](const std::map<ArcId, FieldInit>& f) {
        return [&net, &f](ArcId id, double x) {
          return eval_field_init(f, id, x, net.arc(id).par.length);
        };
      };
      return stepper.make_state(field(cfg.initial.u), field(cfg.initial.v),
                                field(cfg.initial.psi));
    }
    case InitialSpec::Kind::StationaryPerturbation: {
      if (!profile)
        throw std::invalid_argument("stationary_perturbation initial data needs a profile");
      SimState s = profile_state(stepper, *profile);
      add_perturbation(net, s, cfg.initial.amplitude, cfg.initial.randomize,
                       cfg.experiment.seed);
      return s;
    }
  }
  throw std::logic_error("unknown initial kind");
}

RunStats run_simulation(Stepper& stepper, SimState& state, const RunOptions& opt) {
  RunStats stats;
  const double dt0 = stepper.default_dt();

  std::set<double> marks;
  for (double t = opt.cadence; t < opt.t_final; t += opt.cadence) marks.insert(t);
  for (double t : opt.snapshot_times)
    if (t > 0 && t <= opt.t_final) marks.insert(t);
  marks.insert(opt.t_final);

  bool bound_ok = opt.check_sup_bound;
  auto sample = [&](double t) {
    TimeSeriesRow row;
    row.t = t;
    row.mass = stepper.mass(state);
    row.mass_residual = stepper.mass_residual(state);
    row.max_node_flux_residual = stats.max_flux_residual;
    if (bound_ok) {
      try {
        SupBound b = stepper.sup_bound_check(state);
        row.sup_u = b.lhs;
        row.bound_rhs = b.rhs;
        stats.min_bound_slack = std::min(stats.min_bound_slack, b.rhs - b.lhs);
      } catch (const ValidationError&) {
        bound_ok = false;  // (nd) fails; the bound is undefined
      }
    }
    if (!bound_ok) {
      row.sup_u = std::numeric_limits<double>::quiet_NaN();
      row.bound_rhs = std::numeric_limits<double>::quiet_NaN();
    }
    if (opt.ref) {
      double du = 0, dv = 0, dp = 0;
      for (size_t ai = 0; ai < state.u.size(); ++ai) {
        du = std::max(du, (state.u[ai] - opt.ref->u[ai]).cwiseAbs().maxCoeff());
        dv = std::max(dv, (state.v[ai] - opt.ref->v[ai]).cwiseAbs().maxCoeff());
        dp = std::max(dp, (state.psi[ai] - opt.ref->psi[ai]).cwiseAbs().maxCoeff());
      }
      row.dist_u = du;
      row.dist_v = dv;
      row.dist_psi = dp;
      stats.sup_dist_series.emplace_back(t, std::max({du, dv, dp}));
    }
    if (opt.csv) write_timeseries_row(*opt.csv, row);
    if (opt.record_history) {
      HistorySample h;
      h.t = t;
      h.u = state.u;
      h.v = state.v;
      h.psi = state.psi;
      stats.history.push_back(std::move(h));
    }
  };

  if (opt.csv) write_timeseries_header(*opt.csv);
  sample(0.0);
  if (opt.on_snapshot &&
      (opt.snapshot_times.empty() ||
       std::find(opt.snapshot_times.begin(), opt.snapshot_times.end(), 0.0) !=
           opt.snapshot_times.end()))
    opt.on_snapshot(0.0, state);

  double t = 0;
  for (double target : marks) {
    while (t < target - 1e-12 * std::max(1.0, target)) {
      const double dt = std::min(dt0, target - t);
      StepReport rep = stepper.step(state, dt);
      t = state.t;
      ++stats.steps;
      stats.max_flux_residual = std::max(stats.max_flux_residual, rep.max_node_flux_residual);
      stats.max_flux_rel = std::max(stats.max_flux_rel, rep.max_node_flux_rel);
      stats.max_dissipation_gap =
          std::max(stats.max_dissipation_gap, rep.max_dissipation_gap);
      stats.max_dissipation_rel = std::max(stats.max_dissipation_rel, rep.max_dissipation_rel);
      stats.max_mass_residual = std::max(stats.max_mass_residual, rep.mass_residual);
      stats.max_cfl = std::max(stats.max_cfl, rep.cfl);
    }
    state.t = t = target;  // land exactly on the mark
    sample(t);
    if (opt.on_snapshot && std::find(opt.snapshot_times.begin(), opt.snapshot_times.end(),
                                     target) != opt.snapshot_times.end())
      opt.on_snapshot(target, state);
  }
  return stats;
}

int cmd_validate(const Config& cfg, std::ostream& out) {
  Network net;
  try {
    net = build_network(cfg);
  } catch (const std::exception& e) {
    out << "error: " << e.what() << "\n";
    out << "validation: FAILED\n";
    return 1;
  }
  // Re-run for the full report text (build_network already validated).
  ValidationReport rep = validate_network(net);
  out << rep.to_string();
  try {
    build_boundary(cfg).validate(net);
  } catch (const std::exception& e) {
    out << "error: " << e.what() << "\n";
    out << "validation: FAILED\n";
    return 1;
  }
  if (rep.nd_ok && rep.acyclic) out << "summary: (nd) satisfied, acyclic\n";
  if (!rep.acyclic || !rep.nd_ok) out << "summary: stationary solver unavailable\n";
  out << "validation: OK\n";
  return 0;
}

namespace {

void ensure_dir(const std::string& dir) {
  if (!dir.empty()) fs::create_directories(dir);
}

void dump_operator(const Config& cfg, const Network& net, const std::string& out_dir) {
  std::vector<double> reaction;
  for (const auto& a : net.arcs) reaction.push_back(a.par.degradation);
  EllipticOperator op(net, reaction);
  std::ofstream f(fs::path(out_dir) / "matrix.txt");
  f << matrix_triplets(op.matrix());
  (void)cfg;
}

std::string snapshot_name(double t) {
  std::string s = "snapshot_t" + format_double(t) + ".txt";
  std::replace(s.begin(), s.end(), '.', 'p');
  // keep the extension dot
  s.replace(s.rfind("ptxt"), 4, ".txt");
  return s;
}

}  // namespace

int cmd_simulate(const Config& cfg, const std::string& out_dir, bool dump_matrix,
                 std::ostream& log) {
  try {
    Network net = build_network(cfg);
    BoundarySpec bc = build_boundary(cfg);
    Stepper stepper(net, bc);
    ensure_dir(out_dir);
    if (dump_matrix) dump_operator(cfg, net, out_dir);

    std::optional<StationaryProfile> profile;
    if (cfg.initial.kind == InitialSpec::Kind::StationaryPerturbation) {
      FixedPointOptions fpo;
      fpo.tol = cfg.experiment.tol;
      profile = fixed_point(net, bc, cfg.experiment.mu_s, fpo);
    }
    SimState state = initial_state(stepper, cfg, profile ? &*profile : nullptr);

    // Reference for the distance columns: the stationary profile when one is
    // in play, otherwise the initial state (drift diagnostics).
    ReferenceFields ref;
    if (profile) {
      ref = reference_fields(net, *profile);
    } else {
      ref.u = state.u;
      ref.v = state.v;
      ref.psi = state.psi;
    }

    std::ofstream csv(fs::path(out_dir) / "timeseries.csv");
    RunOptions opt;
    opt.t_final = cfg.experiment.t_final;
    opt.cadence = cfg.experiment.output_every;
    opt.ref = &ref;
    opt.csv = &csv;
    opt.snapshot_times = cfg.experiment.snapshot_times;
    if (opt.snapshot_times.empty()) opt.snapshot_times = {0.0, cfg.experiment.t_final};
    opt.on_snapshot = [&](double t, const SimState& s) {
      std::ofstream snap(fs::path(out_dir) / snapshot_name(t));
      write_snapshot(snap, net, s);
    };
    RunStats stats = run_simulation(stepper, state, opt);

    log << "steps " << stats.steps << ", final mass " << format_double(stepper.mass(state))
        << ", max mass residual " << format_double(stats.max_mass_residual)
        << ", max node flux residual " << format_double(stats.max_flux_residual)
        << ", min bound slack " << format_double(stats.min_bound_slack) << "\n";
    return 0;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return 1;
  }
}

int cmd_stationary(const Config& cfg, const std::string& out_dir, const std::string& special,
                   bool dump_matrix, std::ostream& log) {
  try {
    Network net = build_network(cfg);
    BoundarySpec bc = build_boundary(cfg);
    ensure_dir(out_dir);
    if (dump_matrix) dump_operator(cfg, net, out_dir);

    StationaryProfile p;
    if (special == "zero")
      p = special_zero(net, bc);
    else if (special == "constant")
      p = special_constant(net, bc, cfg.experiment.mu_s);
    else {
      FixedPointOptions fpo;
      fpo.tol = cfg.experiment.tol;
      p = fixed_point(net, bc, cfg.experiment.mu_s, fpo);
    }
    std::ofstream f(fs::path(out_dir) / "profile.txt");
    write_profile(f, net, p);
    try {
      MuThresholds t = mu_thresholds(net, bc, p.mu_s, cfg.experiment.K2bar);
      f << "# advisory thresholds (K2bar " << format_double(cfg.experiment.K2bar) << ")\n";
      f << "omega " << format_double(t.omega) << "\n";
      f << "conditions " << (t.cond1 ? 1 : 0) << " " << (t.cond2 ? 1 : 0) << "\n";
      if (t.mu_minus)
        f << "mu_minus " << format_double(*t.mu_minus) << " mu_plus "
          << format_double(*t.mu_plus) << "\n";
    } catch (const std::exception& e) {
      f << "# advisory thresholds unavailable: " << e.what() << "\n";
    }
    log << "converged in " << p.iterations << " iterations, worst residual "
        << format_double(p.residuals.worst()) << ", U nonnegative "
        << (p.u_nonnegative ? "yes" : "no") << "\n";
    return 0;
  } catch (const StationaryError& e) {
    log << "error: " << e.what() << "\n";
    if (!e.contraction.empty()) {
      log << "contraction ratios:";
      for (double r : e.contraction) log << " " << format_double(r);
      log << "\n";
    }
    return 1;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return 1;
  }
}

int cmd_perturb(const Config& cfg, const std::string& out_dir, std::ostream& log) {
  try {
    Network net = build_network(cfg);
    BoundarySpec bc = build_boundary(cfg);
    Stepper stepper(net, bc);
    ensure_dir(out_dir);

    FixedPointOptions fpo;
    fpo.tol = cfg.experiment.tol;
    StationaryProfile profile = fixed_point(net, bc, cfg.experiment.mu_s, fpo);

    Config pcfg = cfg;
    pcfg.initial.kind = InitialSpec::Kind::StationaryPerturbation;
    SimState state = initial_state(stepper, pcfg, &profile);
    ReferenceFields ref = reference_fields(net, profile);

    std::ofstream csv(fs::path(out_dir) / "timeseries.csv");
    RunOptions opt;
    opt.t_final = cfg.experiment.t_final;
    opt.cadence = cfg.experiment.output_every;
    opt.ref = &ref;
    opt.csv = &csv;
    opt.record_history = true;
    RunStats stats = run_simulation(stepper, state, opt);

    // F_T accumulation over sample prefixes.
    std::ofstream ft(fs::path(out_dir) / "ft.csv");
    ft << "t,F_T\n";
    std::vector<double> fts;
    for (size_t n = 2; n <= stats.history.size(); ++n) {
      std::vector<HistorySample> prefix(stats.history.begin(), stats.history.begin() + n);
      const double F = ft_functional(net, prefix, ref);
      fts.push_back(F);
      ft << format_double(prefix.back().t) << "," << format_double(F) << "\n";
    }

    const double d0 = stats.sup_dist_series.front().second;
    const double dT = stats.sup_dist_series.back().second;
    std::ofstream rep(fs::path(out_dir) / "report.txt");
    rep << "initial_sup_distance " << format_double(d0) << "\n";
    rep << "final_sup_distance " << format_double(dT) << "\n";
    rep << "decay_ratio " << format_double(d0 > 0 ? dT / d0 : 0) << "\n";
    if (!fts.empty()) rep << "F_final " << format_double(fts.back()) << "\n";
    log << "initial distance " << format_double(d0) << ", final distance "
        << format_double(dT) << ", steps " << stats.steps << "\n";
    return 0;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return 1;
  }
}

int cmd_oracle_check(const Config& cfg, const std::string& out_dir, double tol,
                     std::ostream& log) {
  try {
    Network net = build_network(cfg);
    BoundarySpec bc = build_boundary(cfg);
    ensure_dir(out_dir);

    FixedPointOptions fpo;
    fpo.tol = cfg.experiment.tol;
    StationaryProfile fp = fixed_point(net, bc, cfg.experiment.mu_s, fpo);
    StationaryProfile so = shooting_oracle(net, bc, cfg.experiment.mu_s);

    double du = 0, dpsi = 0, dv = 0, dc = 0;
    for (size_t ai = 0; ai < net.arcs.size(); ++ai) {
      du = std::max(du, (fp.U[ai] - so.U[ai]).cwiseAbs().maxCoeff());
      dpsi = std::max(dpsi, (fp.Psi[ai] - so.Psi[ai]).cwiseAbs().maxCoeff());
      dv = std::max(dv, std::fabs(fp.V[ai] - so.V[ai]));
      dc = std::max(dc, std::fabs(fp.C[ai] - so.C[ai]));
    }
    const bool pass = du <= tol && dpsi <= tol;
    std::ofstream f(fs::path(out_dir) / "oracle_check.txt");
    for (std::ostream* os : {static_cast<std::ostream*>(&f), &log}) {
      *os << "max |U_fixed_point - U_shooting|   = " << format_double(du) << "\n"
          << "max |Psi_fixed_point - Psi_shooting| = " << format_double(dpsi) << "\n"
          << "max |V difference| = " << format_double(dv) << "\n"
          << "max |C difference| = " << format_double(dc) << "\n"
          << "tolerance " << format_double(tol) << ": " << (pass ? "PASS" : "FAIL") << "\n";
    }
    return pass ? 0 : 1;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace netchemo

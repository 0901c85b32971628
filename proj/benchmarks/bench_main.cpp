#include "netchemo/config.hpp"
#include "netchemo/dynamics.hpp"
#include "netchemo/elliptic.hpp"
#include "netchemo/stationary.hpp"

#include <benchmark/benchmark.h>

using namespace netchemo;

namespace {

Config star_config(int cells) {
  Config cfg = load_config(std::string(NETCHEMO_FIXTURE_DIR) + "/star3.json");
  for (auto& a : cfg.arcs) a.par.grid_cells = cells;
  return cfg;
}

void BM_EllipticFactorSolve(benchmark::State& state) {
  Config cfg = star_config(static_cast<int>(state.range(0)));
  Network net = build_network(cfg);
  std::vector<double> reaction;
  std::vector<Eigen::VectorXd> src;
  for (const auto& a : net.arcs) {
    reaction.push_back(a.par.degradation);
    src.emplace_back(Eigen::VectorXd::Constant(a.par.grid_cells, 0.3));
  }
  for (auto _ : state) {
    EllipticOperator op(net, reaction);
    Eigen::VectorXd x = op.solve_raw(op.load(src, {0, 0, 0}));
    benchmark::DoNotOptimize(x);
  }
}
BENCHMARK(BM_EllipticFactorSolve)->Arg(128)->Arg(512)->Arg(2048);

void BM_EllipticResolve(benchmark::State& state) {
  Config cfg = star_config(static_cast<int>(state.range(0)));
  Network net = build_network(cfg);
  std::vector<double> reaction;
  std::vector<Eigen::VectorXd> src;
  for (const auto& a : net.arcs) {
    reaction.push_back(a.par.degradation);
    src.emplace_back(Eigen::VectorXd::Constant(a.par.grid_cells, 0.3));
  }
  EllipticOperator op(net, reaction);
  Eigen::VectorXd rhs = op.load(src, {0, 0, 0});
  for (auto _ : state) {
    Eigen::VectorXd x = op.solve_raw(rhs);
    benchmark::DoNotOptimize(x);
  }
}
BENCHMARK(BM_EllipticResolve)->Arg(128)->Arg(512)->Arg(2048);

void BM_NodeSolve(benchmark::State& state) {
  Config cfg = star_config(16);
  Network net = build_network(cfg);
  NodeCoupler nc(net, net.internal_nodes[0]);
  Eigen::VectorXd w(3);
  w << 1.0, -0.3, 0.2;
  for (auto _ : state) {
    NodeTraces tr = nc.solve(w);
    benchmark::DoNotOptimize(tr.u);
  }
}
BENCHMARK(BM_NodeSolve);

void BM_FullStep(benchmark::State& state) {
  Config cfg = star_config(static_cast<int>(state.range(0)));
  Network net = build_network(cfg);
  BoundarySpec bc = build_boundary(cfg);
  Stepper st(net, bc);
  SimState s = st.make_state([](ArcId, double x) { return 0.2 + 0.1 * std::sin(x); },
                             [](ArcId, double) { return 0.0; },
                             [](ArcId, double) { return 0.1; });
  const double dt = st.default_dt();
  for (auto _ : state) {
    st.step(s, dt);
    benchmark::DoNotOptimize(s.u[0]);
  }
}
BENCHMARK(BM_FullStep)->Arg(128)->Arg(512)->Arg(2048);

void BM_FixedPoint(benchmark::State& state) {
  Config cfg = star_config(static_cast<int>(state.range(0)));
  Network net = build_network(cfg);
  BoundarySpec bc = build_boundary(cfg);
  for (auto _ : state) {
    StationaryProfile p = fixed_point(net, bc, cfg.experiment.mu_s);
    benchmark::DoNotOptimize(p.U[0]);
  }
}
BENCHMARK(BM_FixedPoint)->Arg(128)->Arg(512);

}  // namespace

BENCHMARK_MAIN();

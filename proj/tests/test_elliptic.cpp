#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "helpers.hpp"
#include "netchemo/elliptic.hpp"

#include <Eigen/Eigenvalues>
#include <random>
#include <sstream>

using namespace netchemo;
using namespace netchemo::testing;

namespace {

EllipticProblem problem(const Network& net, std::vector<double> reaction,
                        std::vector<Eigen::VectorXd> source, std::vector<double> robin) {
  EllipticProblem p;
  p.net = &net;
  p.reaction = std::move(reaction);
  p.source = std::move(source);
  p.robin_rhs = std::move(robin);
  return p;
}

std::vector<Eigen::VectorXd> zero_source(const Network& net) {
  std::vector<Eigen::VectorXd> s;
  for (const auto& a : net.arcs) s.emplace_back(Eigen::VectorXd::Zero(a.par.grid_cells));
  return s;
}

}  // namespace

TEST_CASE("single-arc Neumann matrix is symmetric and strictly diagonally dominant") {
  Network net = single_arc(params(1, 1, 1, 1, 0, 1, 8));
  EllipticProblem p = problem(net, {1.0}, zero_source(net), {0.0, 0.0});
  SpMat A = assemble(p);
  Eigen::MatrixXd D = Eigen::MatrixXd(A);
  CHECK((D - D.transpose()).cwiseAbs().maxCoeff() == 0.0);
  for (int i = 0; i < D.rows(); ++i) {
    double off = D.row(i).cwiseAbs().sum() - std::fabs(D(i, i));
    CHECK(std::fabs(D(i, i)) > off);
  }
}

TEST_CASE("star assembly couples exactly the shared endpoint dofs") {
  Network net = star3(params(1, 1, 1, 1, 0, 1, 8));
  EllipticProblem p = problem(net, {1, 1, 1}, zero_source(net), {0, 0, 0});
  SpMat A = assemble(p);
  Eigen::MatrixXd D = Eigen::MatrixXd(A);
  CHECK((D - D.transpose()).cwiseAbs().maxCoeff() == 0.0);

  EllipticOperator op(net, {1, 1, 1});
  // Arc 1 ends at the node (last dof), arcs 2 and 3 start there (dof 0).
  const int n1 = op.dof(0, op.grid(0).npoints() - 1);
  const int n2 = op.dof(1, 0);
  const int n3 = op.dof(2, 0);
  CHECK(D(n1, n2) == doctest::Approx(-1.0));
  CHECK(D(n1, n3) == doctest::Approx(-1.0));
  CHECK(D(n2, n3) == doctest::Approx(-1.0));
  // No coupling away from the node block.
  CHECK(D(op.dof(0, 0), op.dof(1, 3)) == 0.0);

  SUBCASE("alpha = 0 decouples the arcs") {
    Network net0 = star3(params(1, 1, 1, 1, 0, 1, 8), ones_offdiag(3),
                         Eigen::MatrixXd::Zero(3, 3));
    EllipticProblem p0 = problem(net0, {1, 1, 1}, zero_source(net0), {0, 0, 0});
    Eigen::MatrixXd D0 = Eigen::MatrixXd(assemble(p0));
    CHECK(D0(n1, n2) == 0.0);
    CHECK(D0(n1, n3) == 0.0);
    CHECK(D0(n2, n3) == 0.0);
  }
}

TEST_CASE("constant state solves the reaction-diffusion problem exactly") {
  const double k = 0.73, b = 1.4;
  Network net = single_arc(params(1, 1, 1, 1, 0, b, 32));
  std::vector<Eigen::VectorXd> g = {Eigen::VectorXd::Constant(32, b * k)};
  EllipticSolution sol = solve(problem(net, {b}, g, {0.0, 0.0}));
  CHECK((sol.psi[0].array() - k).abs().maxCoeff() <= 1e-13);
  CHECK(sol.psi_x[0].cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(sol.algebraic_residual <= 1e-12);
}

TEST_CASE("closed-form Robin problems on the unit arc") {
  // -psi'' + psi = 0 with eta D psi_x + d psi = P.
  const int cells = 512;
  SUBCASE("d = 1 at both ends, P = (1, 0): psi = exp(-x)/2") {
    Network net = single_arc(params(1, 1, 1, 1, 0, 1, cells), 1.0, 1.0);
    EllipticSolution sol = solve(problem(net, {1.0}, zero_source(net), {1.0, 0.0}));
    ArcGrid g{1.0, cells};
    for (double x : {0.0, 0.5, 1.0})
      CHECK(sol.eval(g, 0, x) == doctest::Approx(std::exp(-x) / 2).epsilon(2e-5));
  }
  SUBCASE("d = (1, 0), P = (1, 0): psi = cosh(1-x)/(cosh 1 + sinh 1)") {
    Network net = single_arc(params(1, 1, 1, 1, 0, 1, cells), 1.0, 0.0);
    EllipticSolution sol = solve(problem(net, {1.0}, zero_source(net), {1.0, 0.0}));
    ArcGrid g{1.0, cells};
    const double den = std::cosh(1.0) + std::sinh(1.0);
    for (double x : {0.0, 0.5, 1.0})
      CHECK(sol.eval(g, 0, x) == doctest::Approx(std::cosh(1 - x) / den).epsilon(2e-5));
  }
}

TEST_CASE("large alpha approaches the merged-arc solution") {
  const int cells = 200;
  ArcParams p = params(1, 1, 1, 1, 0, 1, cells);
  Network path;
  path.arcs.push_back({1, 101, 1, p});
  path.arcs.push_back({2, 1, 102, p});
  InternalNode n;
  n.id = 1;
  n.alpha = ones_offdiag(2, 1e6);
  n.sigma = ones_offdiag(2);
  path.internal_nodes.push_back(n);
  path.external_nodes.push_back({101, -1, -1, 1.0});
  path.external_nodes.push_back({102, -1, -1, 1.0});
  validate_network_or_throw(path);

  auto src = [](double x) { return std::sin(M_PI * x / 2); };  // smooth on [0, 2]
  std::vector<Eigen::VectorXd> g2(2);
  for (int ai = 0; ai < 2; ++ai) {
    g2[ai].resize(cells);
    for (int c = 0; c < cells; ++c) g2[ai](c) = src(ai + (c + 0.5) / cells);
  }
  EllipticSolution sol2 = solve(problem(path, {1, 1}, g2, {0.4, 0.0}));

  Network merged = single_arc(params(2, 1, 1, 1, 0, 1, 2 * cells), 1.0, 1.0);
  std::vector<Eigen::VectorXd> gm(1);
  gm[0].resize(2 * cells);
  for (int c = 0; c < 2 * cells; ++c) gm[0](c) = src((c + 0.5) / cells);
  EllipticSolution solm = solve(problem(merged, {1.0}, gm, {0.4, 0.0}));

  ArcGrid gm_grid{2.0, 2 * cells};
  ArcGrid gp_grid{1.0, cells};
  double worst = 0;
  for (int ai = 0; ai < 2; ++ai)
    for (double x : {0.1, 0.35, 0.6, 0.85})
      worst = std::max(worst, std::fabs(sol2.eval(gp_grid, ai, x) -
                                        solm.eval(gm_grid, 0, ai + x)));
  CHECK(worst <= 1e-4);
}

TEST_CASE("transmission residuals") {
  SUBCASE("constant solution leaves zero residuals") {
    const double k = 0.42, b = 1.0;
    Network net = star3(params(1, 1, 1, 1, 0, b, 32));
    std::vector<Eigen::VectorXd> g;
    for (int i = 0; i < 3; ++i) g.emplace_back(Eigen::VectorXd::Constant(32, b * k));
    EllipticProblem p = problem(net, {b, b, b}, g, {0, 0, 0});
    EllipticSolution sol = solve(p);
    TransmissionResiduals r = transmission_residual(sol, p);
    CHECK(r.max_kc_residual <= 1e-12);
    CHECK(r.max_flux_sum <= 1e-12);
    CHECK(r.max_robin_residual <= 1e-12);
  }
  SUBCASE("residual decays with order >= 1 under grid halving") {
    auto run = [](int cells) {
      Network net = star3(params(1, 1, 1, 1, 0, 1, cells), ones_offdiag(3),
                          ones_offdiag(3), {1.0, 1.0, 1.0});
      std::vector<Eigen::VectorXd> g;
      for (int ai = 0; ai < 3; ++ai) {
        Eigen::VectorXd s(cells);
        for (int c = 0; c < cells; ++c)
          s(c) = std::cos(M_PI * (ai + 1) * (c + 0.5) / cells);
        g.push_back(s);
      }
      EllipticProblem p = problem(net, {1, 1, 1}, g, {0.5, -0.2, 0.1});
      EllipticSolution sol = solve(p);
      TransmissionResiduals r = transmission_residual(sol, p);
      return std::max(r.max_kc_residual, r.max_robin_residual);
    };
    const double r1 = run(64), r2 = run(128);
    CHECK(r2 <= r1 / 1.8);
  }
  SUBCASE("alpha = 0 turns the defect into the bare flux") {
    Network net = star3(params(1, 1, 1, 1, 0, 1, 64), ones_offdiag(3),
                        Eigen::MatrixXd::Zero(3, 3));
    std::vector<Eigen::VectorXd> g;
    for (int ai = 0; ai < 3; ++ai) {
      Eigen::VectorXd s(64);
      for (int c = 0; c < 64; ++c) s(c) = (ai == 0) ? std::sin(M_PI * (c + 0.5) / 64) : 0.0;
      g.push_back(s);
    }
    EllipticProblem p = problem(net, {1, 1, 1}, g, {0, 0, 0});
    EllipticSolution sol = solve(p);
    TransmissionResiduals r = transmission_residual(sol, p);
    double flux_max = 0;
    for (int ai = 0; ai < 3; ++ai) {
      const int side = net.delta(1, net.arcs[ai].id) > 0 ? 1 : 0;
      ArcGrid grid{1.0, 64};
      flux_max = std::max(flux_max, std::fabs(sol.endpoint_gradient(grid, ai, side)));
    }
    CHECK(r.nodes[0].max_kc_residual == doctest::Approx(flux_max).epsilon(1e-12));
  }
}

TEST_CASE("assembled operators are positive definite for random admissible data") {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> unif(0, 1);
  for (int trial = 0; trial < 8; ++trial) {
    Eigen::MatrixXd alpha(3, 3);
    for (int i = 0; i < 3; ++i)
      for (int j = i; j < 3; ++j) alpha(i, j) = alpha(j, i) = unif(rng);
    alpha.diagonal().setZero();
    std::array<double, 3> d = {unif(rng), 0.0, unif(rng)};
    Network net = star3(params(1, 1, 1, 0.2 + unif(rng), 0, 0.1 + unif(rng), 6),
                        ones_offdiag(3), alpha, d);
    std::vector<double> reaction = {0.1 + unif(rng), 0.1 + unif(rng), 0.1 + unif(rng)};
    EllipticOperator op(net, reaction);
    Eigen::MatrixXd D = Eigen::MatrixXd(op.matrix());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(D);
    CHECK(es.eigenvalues().minCoeff() > 0);
  }
}

TEST_CASE("summing the coupling rows over a node cancels (flux conservation)") {
  Network net = star3(params(1, 1, 1, 1, 0, 1, 10));
  EllipticOperator with(net, {1, 1, 1});
  Network net0 = star3(params(1, 1, 1, 1, 0, 1, 10), ones_offdiag(3),
                       Eigen::MatrixXd::Zero(3, 3));
  EllipticOperator without(net0, {1, 1, 1});
  Eigen::MatrixXd penalty =
      Eigen::MatrixXd(with.matrix()) - Eigen::MatrixXd(without.matrix());

  std::mt19937 rng(3);
  std::uniform_real_distribution<double> unif(-1, 1);
  Eigen::VectorXd x(with.n_dofs());
  for (int i = 0; i < x.size(); ++i) x(i) = unif(rng);
  Eigen::VectorXd y = penalty * x;
  const double row_sum = y(with.dof(0, with.grid(0).npoints() - 1)) + y(with.dof(1, 0)) +
                         y(with.dof(2, 0));
  CHECK(std::fabs(row_sum) <= 1e-13 * x.cwiseAbs().maxCoeff());
}

TEST_CASE("nonnegative data keeps the solution essentially nonnegative") {
  std::mt19937 rng(23);
  std::uniform_real_distribution<double> unif(0, 1);
  for (int trial = 0; trial < 6; ++trial) {
    Network net = star3(params(1, 1, 1, 1, 0, 1, 48), ones_offdiag(3), ones_offdiag(3),
                        {1.0, 1.0, 0.0});
    std::vector<Eigen::VectorXd> g;
    for (int ai = 0; ai < 3; ++ai) {
      Eigen::VectorXd s(48);
      for (int c = 0; c < 48; ++c) s(c) = unif(rng);
      g.push_back(s);
    }
    std::vector<double> P = {unif(rng), unif(rng), 0.0};
    EllipticSolution sol = solve(problem(net, {1, 1, 1}, g, P));
    double lo = 0;
    for (int ai = 0; ai < 3; ++ai) lo = std::min(lo, sol.psi[ai].minCoeff());
    CHECK(lo >= -1e-8);
  }
}

TEST_CASE("matrix triplet dump matches the sparse structure") {
  Network net = single_arc(params(1, 1, 1, 1, 0, 1, 4));
  EllipticOperator op(net, {1.0});
  std::string txt = matrix_triplets(op.matrix());
  std::istringstream is(txt);
  int rows = 0;
  std::string line;
  while (std::getline(is, line))
    if (!line.empty()) ++rows;
  CHECK(rows == op.matrix().nonZeros());
}

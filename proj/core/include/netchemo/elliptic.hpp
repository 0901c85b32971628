#pragma once

#include "netchemo/graph.hpp"

#include <Eigen/Sparse>
#include <vector>

namespace netchemo {

using SpMat = Eigen::SparseMatrix<double>;

/// Uniform cell-centered grid of one arc plus the two endpoints. The P1
/// unknowns live at {0, h/2, 3h/2, ..., L-h/2, L}; entries 1..cells are the
/// cell centers shared with the dynamics state.
struct ArcGrid {
  double length = 1;
  int cells = 0;

  double h() const { return length / cells; }
  int npoints() const { return cells + 2; }
  double point(int p) const {
    if (p == 0) return 0;
    if (p == cells + 1) return length;
    return (p - 0.5) * h();
  }
  double center(int c) const { return (c + 0.5) * h(); }
};

/// -D_i psi'' + c_i psi = g_i per arc, Kedem-Katchalsky coupling at inner
/// nodes, Robin data eta D psi_x + d psi = P at the exits.
struct EllipticProblem {
  const Network* net = nullptr;
  std::vector<double> reaction;             // c_i > 0, per arc (net order)
  std::vector<Eigen::VectorXd> source;      // g_i at cell centers, per arc
  std::vector<double> robin_rhs;            // P_j, aligned with net->external_nodes
};

struct EllipticSolution {
  std::vector<Eigen::VectorXd> psi;    // per arc, extended grid (cells+2 values)
  std::vector<Eigen::VectorXd> psi_x;  // per arc, cell centers
  double algebraic_residual = 0;       // |A x - b| / |b|

  /// P1 interpolation at an arbitrary arc coordinate.
  double eval(const ArcGrid& g, int arc_index, double x) const;
  double endpoint(int arc_index, int side) const {  // side 0: x=0, 1: x=L
    const auto& p = psi[arc_index];
    return side == 0 ? p(0) : p(p.size() - 1);
  }
  /// One-sided second-order gradient at an arc endpoint (outward x side).
  double endpoint_gradient(const ArcGrid& g, int arc_index, int side) const;
};

struct NodeFluxResidual {
  NodeId node = -1;
  double max_kc_residual = 0;  // max_i |delta D psi_x - sum_j alpha (psi_j - psi_i)|
  double flux_sum = 0;         // |sum_i delta_i D_i psi_x(N)|
};

struct TransmissionResiduals {
  std::vector<NodeFluxResidual> nodes;
  double max_robin_residual = 0;
  double max_kc_residual = 0;
  double max_flux_sum = 0;
};

/// Assembles and factors the operator once; BE stepping reuses it with many
/// right-hand sides. The matrix is symmetric positive definite for any
/// admissible alpha, d >= 0 and c > 0.
class EllipticOperator {
public:
  EllipticOperator(const Network& net, std::vector<double> reaction);

  const SpMat& matrix() const { return A_; }
  const SpMat& mass_matrix() const { return M_; }
  int n_dofs() const { return n_; }
  int dof(int arc_index, int p) const { return offsets_[arc_index] + p; }
  ArcGrid grid(int arc_index) const;

  /// Exact integral of piecewise-constant cell data against the P1 hats,
  /// plus the Robin load P_j at the exit dofs.
  Eigen::VectorXd load(const std::vector<Eigen::VectorXd>& cell_source,
                       const std::vector<double>& robin_rhs) const;
  /// Consistent-mass product with a P1 field (used by the psi/dt BE term).
  Eigen::VectorXd mass_times(const std::vector<Eigen::VectorXd>& p1_field) const;

  Eigen::VectorXd solve_raw(const Eigen::VectorXd& rhs, double* rel_residual = nullptr) const;
  EllipticSolution unpack(const Eigen::VectorXd& x, double rel_residual) const;

private:
  const Network* net_;
  std::vector<double> reaction_;
  std::vector<int> offsets_;
  int n_ = 0;
  SpMat A_, M_;
  Eigen::SimplicialLDLT<SpMat> fact_;
};

/// Galerkin system of the problem (exposed for inspection and tests).
SpMat assemble(const EllipticProblem& prob);

/// Direct sparse solve; relative algebraic residual above 1e-12 is an error.
EllipticSolution solve(const EllipticProblem& prob);

/// Discrete node-coupling/Robin defects of a solution, using the recovered one-sided
/// gradients. The flux sums check the conservation identity at each node.
TransmissionResiduals transmission_residual(const EllipticSolution& sol,
                                            const EllipticProblem& prob);

/// Matrix dump in "row col value" triplet lines.
std::string matrix_triplets(const SpMat& m);

}  // namespace netchemo

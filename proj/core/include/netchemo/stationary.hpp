#pragma once

#include "netchemo/boundary.hpp"
#include "netchemo/elliptic.hpp"
#include "netchemo/graph.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace netchemo {

struct StationaryResiduals {
  double max_psi_ode = 0;       // sup |-D Psi'' + b Psi - a U| (uniform interior)
  double max_momentum_ode = 0;  // sup |lambda U' - U Psi' + beta V|
  double max_tc = 0;            // node transmission defect for (U, V)
  double max_kc = 0;            // node transmission defect for Psi
  double max_robin = 0;         // exit Robin defect
  double max_wflux = 0;         // exit flux defect |eta lambda V - W|
  double mass_error = 0;        // |sum_i int U_i - mu_s|

  double worst() const;
  std::string to_string() const;
};

/// Stationary triple (U, V, Psi) sampled on the extended per-arc grids
/// (endpoint, cell centers, endpoint), with the integration constants C_i.
struct StationaryProfile {
  std::vector<double> V;             // arcwise constant
  std::vector<Eigen::VectorXd> U;    // extended grid values
  std::vector<Eigen::VectorXd> Psi;  // extended grid values
  std::vector<double> C;             // integration constants
  double mu_s = 0;
  bool converged = false;
  bool u_nonnegative = false;
  int iterations = 0;
  std::vector<double> contraction;   // successive displacement ratios
  StationaryResiduals residuals;

  Eigen::VectorXd u_cells(int arc_index) const;
  Eigen::VectorXd psi_cells(int arc_index) const;
};

/// Tree recursion data expressing every C_i through the root constant:
/// C_i = Qt_i C_{k1} + Ot_i. Qt is carried in log space (it is a product of
/// positive endpoint ratios); overflow is reported, never guessed.
struct CoefficientChain {
  std::vector<Eigen::VectorXd> E;    // exp(Psi/lambda), extended grids
  std::vector<Eigen::VectorXd> J;    // (beta/lambda) int_0^x exp(-Psi/lambda)
  std::vector<double> log_Qt;        // per arc
  std::vector<double> Ot;            // per arc
  std::map<NodeId, Eigen::VectorXd> Q_node, O_node;  // per node, local arc order
  double lambda1 = 0;                // mass closure pieces
  double lambda2 = 0;
  double C_k1 = 0;
  std::vector<double> C;             // resulting constants
  std::vector<Eigen::VectorXd> U;    // resulting density, extended grids
};

struct ChainOptions {
  std::optional<NodeId> root;                // spanning-tree root override
  std::map<NodeId, ArcId> pivot_override;    // per-node pivot override
};

class StationaryError : public std::runtime_error {
public:
  StationaryError(const std::string& what, std::vector<double> ratios = {})
      : std::runtime_error(what), contraction(std::move(ratios)) {}
  std::vector<double> contraction;
};

/// Flux-determined arcwise V: external arcs carry eta lambda V = W, internal
/// arcs carry minus the exit flux on their start side. Requires an acyclic
/// network and sum_j W_j = 0.
std::vector<double> compute_V(const Network& net, const std::vector<double>& W_by_exit);

/// Lemma-style tree recursion: from Psi (extended grids), V and the target
/// mass, build E, J, the C_i chain closed by the mass condition, and U.
CoefficientChain coefficient_chain(const Network& net,
                                   const std::vector<Eigen::VectorXd>& Psi,
                                   const std::vector<double>& V, double mu_s,
                                   const ChainOptions& opt = {});

struct FixedPointOptions {
  double tol = 1e-12;
  int max_iter = 200;
  ChainOptions chain;
};

/// Banach iteration of the map Psi -> elliptic solve with source a U^Psi.
/// W/P enter through their limits; d through the network. Throws
/// StationaryError when the iteration fails to contract.
StationaryProfile fixed_point(const Network& net, const BoundarySpec& bc, double mu_s,
                              const FixedPointOptions& opt = {});

/// Full defect record of a profile against the stationary problem.
StationaryResiduals residual_report(const StationaryProfile& p, const Network& net,
                                    const BoundarySpec& bc);

/// (0, 0, Psi0) with Psi0 the elliptic solution with zero source; valid on
/// any network, cyclic ones included.
StationaryProfile special_zero(const Network& net, const BoundarySpec& bc);

/// Constant profile (mu_s/|A|, 0, r mu_s/|A|) under the matched-data
/// conditions: uniform a/b ratio, P_j = 0 iff d_j = 0, P_j/d_j matching the
/// profile level, zero flux data. Throws naming the violated clause.
StationaryProfile special_constant(const Network& net, const BoundarySpec& bc, double mu_s);

struct MuThresholds {
  double omega = 0;
  bool cond1 = false;   // positivity of 1 - (4|A| K2/lam) sum |P_j|
  bool cond2 = false;   // omega below the quadratic barrier
  std::optional<double> mu_minus, mu_plus;
};

/// Advisory existence thresholds; K2bar is a user-supplied constant.
MuThresholds mu_thresholds(const Network& net, const BoundarySpec& bc, double mu_s,
                           double K2bar);

/// Discrete H1 norm used for the stopping rule (values plus first
/// differences on the extended grids).
double h1_norm_ext(const Network& net, const std::vector<Eigen::VectorXd>& f);

}  // namespace netchemo

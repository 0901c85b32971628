#pragma once

#include "netchemo/boundary.hpp"
#include "netchemo/graph.hpp"

#include <string>

namespace netchemo::testing {

inline ArcParams params(double L = 1, double lambda = 1, double beta = 1, double D = 1,
                        double a = 1, double b = 1, int cells = 64) {
  ArcParams p;
  p.length = L;
  p.lambda = lambda;
  p.beta = beta;
  p.diffusion = D;
  p.production = a;
  p.degradation = b;
  p.grid_cells = cells;
  return p;
}

inline Eigen::MatrixXd ones_offdiag(int m, double value = 1.0) {
  Eigen::MatrixXd s = Eigen::MatrixXd::Constant(m, m, value);
  s.diagonal().setZero();
  return s;
}

/// Single arc 101 -> 102.
inline Network single_arc(ArcParams p = params(), double d0 = 0, double d1 = 0) {
  Network net;
  net.arcs.push_back({1, 101, 102, p});
  net.external_nodes.push_back({101, -1, -1, d0});
  net.external_nodes.push_back({102, -1, -1, d1});
  validate_network_or_throw(net);
  return net;
}

/// Three arcs around internal node 1: 101 -> 1, 1 -> 102, 1 -> 103.
inline Network star3(ArcParams p = params(), Eigen::MatrixXd sigma = ones_offdiag(3),
                     Eigen::MatrixXd alpha = ones_offdiag(3),
                     std::array<double, 3> d = {0, 0, 0}) {
  Network net;
  net.arcs.push_back({1, 101, 1, p});
  net.arcs.push_back({2, 1, 102, p});
  net.arcs.push_back({3, 1, 103, p});
  InternalNode n;
  n.id = 1;
  n.alpha = std::move(alpha);
  n.sigma = std::move(sigma);
  net.internal_nodes.push_back(n);
  net.external_nodes.push_back({101, -1, -1, d[0]});
  net.external_nodes.push_back({102, -1, -1, d[1]});
  net.external_nodes.push_back({103, -1, -1, d[2]});
  validate_network_or_throw(net);
  return net;
}

/// Path 101 -(1)- n1 -(2)- n2 -(3)- 102 with two internal nodes.
inline Network path3(ArcParams p = params(), double sigma = 1.0, double alpha = 1.0) {
  Network net;
  net.arcs.push_back({1, 101, 1, p});
  net.arcs.push_back({2, 1, 2, p});
  net.arcs.push_back({3, 2, 102, p});
  for (NodeId id : {1, 2}) {
    InternalNode n;
    n.id = id;
    n.alpha = ones_offdiag(2, alpha);
    n.sigma = ones_offdiag(2, sigma);
    net.internal_nodes.push_back(n);
  }
  net.external_nodes.push_back({101, -1, -1, 0});
  net.external_nodes.push_back({102, -1, -1, 0});
  validate_network_or_throw(net);
  return net;
}

/// Uniform zero boundary data for every exit of a network.
inline BoundarySpec zero_boundary(const Network& net) {
  BoundarySpec bc;
  for (const auto& ex : net.external_nodes) {
    ExitData e;
    e.exit = ex.id;
    e.robin_d = ex.robin_d;
    bc.exits.push_back(e);
  }
  return bc;
}

inline std::string fixture(const std::string& name) {
  return std::string(NETCHEMO_FIXTURE_DIR) + "/" + name;
}

}  // namespace netchemo::testing

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "helpers.hpp"
#include "netchemo/config.hpp"
#include "netchemo/graph.hpp"

#include <queue>
#include <random>
#include <set>

using namespace netchemo;
using namespace netchemo::testing;

TEST_CASE("single-arc config parses to an acyclic network") {
  const std::string cfg = R"({
    "nodes": [{"id": 101, "kind": "external"}, {"id": 102, "kind": "external"}],
    "arcs": [{"id": 1, "from": 101, "to": 102, "L": 1, "lambda": 1, "beta": 1,
              "D": 1, "a": 0, "b": 1, "cells": 8}]
  })";
  Network net = parse_network(cfg);
  CHECK(net.acyclic);
  CHECK(net.arcs.size() == 1);
  CHECK(net.internal_nodes.empty());
  CHECK(net.external_nodes.size() == 2);
  CHECK(net.external_node(101).eta == -1);
  CHECK(net.external_node(102).eta == 1);
}

TEST_CASE("3-arc star config yields one internal node of degree 3") {
  Network net = star3();
  CHECK(net.acyclic);
  REQUIRE(net.internal_nodes.size() == 1);
  CHECK(net.internal_nodes[0].incident == std::vector<ArcId>{1, 2, 3});
  CHECK(net.delta(1, 1) == 1);   // arc 1 points into node 1
  CHECK(net.delta(1, 2) == -1);  // arcs 2, 3 leave it
  CHECK(net.delta(1, 3) == -1);
}

TEST_CASE("asymmetric sigma is rejected naming the node") {
  Network net;
  ArcParams p = params();
  net.arcs.push_back({1, 101, 1, p});
  net.arcs.push_back({2, 1, 102, p});
  InternalNode n;
  n.id = 1;
  n.alpha = ones_offdiag(2);
  n.sigma = ones_offdiag(2);
  n.sigma(0, 1) = 2.0;  // breaks symmetry
  net.internal_nodes.push_back(n);
  net.external_nodes.push_back({101, -1, -1, 0});
  net.external_nodes.push_back({102, -1, -1, 0});
  CHECK_THROWS_WITH_AS(validate_network_or_throw(net),
                       doctest::Contains("sigma not symmetric at node 1"), ValidationError);
}

TEST_CASE("pivot rule picks the lowest admissible arc id") {
  Network net = star3();
  CHECK(net.internal_nodes[0].pivot == 1);

  // Knock arc 1 out of pivot eligibility: sigma_{2,1} = 0.
  Eigen::MatrixXd s = ones_offdiag(3);
  s(1, 0) = s(0, 1) = 0;
  Network net2 = star3(params(), s);
  CHECK(net2.internal_nodes[0].pivot == 3);  // arc 2 also fails (sigma_{1,2} = 0)
}

TEST_CASE("zero sigma violates (nd) as a warning, not a fatal error") {
  Network net;
  ArcParams p = params();
  net.arcs.push_back({1, 101, 1, p});
  net.arcs.push_back({2, 1, 102, p});
  net.arcs.push_back({3, 1, 103, p});
  InternalNode n;
  n.id = 1;
  n.alpha = ones_offdiag(3);
  n.sigma = Eigen::MatrixXd::Zero(3, 3);
  net.internal_nodes.push_back(n);
  for (NodeId id : {101, 102, 103}) net.external_nodes.push_back({id, -1, -1, 0});
  ValidationReport rep = validate_network(net);
  CHECK(rep.ok());
  CHECK_FALSE(rep.nd_ok);
  CHECK(net.internal_nodes[0].pivot == -1);
}

TEST_CASE("a closed triangle without exits is rejected") {
  Network net;
  ArcParams p = params();
  net.arcs.push_back({1, 1, 2, p});
  net.arcs.push_back({2, 2, 3, p});
  net.arcs.push_back({3, 3, 1, p});
  for (NodeId id : {1, 2, 3}) {
    InternalNode n;
    n.id = id;
    n.alpha = ones_offdiag(2);
    n.sigma = ones_offdiag(2);
    net.internal_nodes.push_back(n);
  }
  ValidationReport rep = validate_network(net);
  CHECK_FALSE(rep.ok());
  bool found = false;
  for (const auto& i : rep.issues) found = found || i.message == "no external nodes";
  CHECK(found);
}

TEST_CASE("disconnected graphs are rejected") {
  Network net;
  ArcParams p = params();
  net.arcs.push_back({1, 101, 102, p});
  net.arcs.push_back({2, 103, 104, p});
  for (NodeId id : {101, 102, 103, 104}) net.external_nodes.push_back({id, -1, -1, 0});
  ValidationReport rep = validate_network(net);
  CHECK_FALSE(rep.ok());
  CHECK_FALSE(rep.connected);
}

TEST_CASE("transmission antisymmetry cancels for random symmetric sigma") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> unif(0, 2);
  for (int trial = 0; trial < 50; ++trial) {
    const int m = 2 + trial % 4;
    Eigen::MatrixXd sigma(m, m);
    for (int i = 0; i < m; ++i)
      for (int j = i; j < m; ++j) sigma(i, j) = sigma(j, i) = unif(rng);
    Eigen::VectorXd u(m);
    for (int i = 0; i < m; ++i) u(i) = unif(rng) - 1;
    double total = 0;
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) total += sigma(i, j) * (u(j) - u(i));
    CHECK(std::fabs(total) <= 1e-13 * sigma.sum() * u.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("exit side sets on the 3-arc path") {
  Network net = path3();
  SUBCASE("middle arc sees only the left exit from its start node") {
    auto side = exit_side_set(net, 2);
    CHECK(side == std::vector<NodeId>{101});
  }
  SUBCASE("external arcs are rejected") {
    CHECK_THROWS_AS(exit_side_set(net, 1), std::invalid_argument);
  }
}

TEST_CASE("exit side set of a caterpillar with two leaves on the start side") {
  // 101 -(1)-> n1 <-(2)- 102,  n1 -(3)-> n2 -(4)-> 103
  Network net;
  ArcParams p = params();
  net.arcs.push_back({1, 101, 1, p});
  net.arcs.push_back({2, 102, 1, p});
  net.arcs.push_back({3, 1, 2, p});
  net.arcs.push_back({4, 2, 103, p});
  InternalNode n1;
  n1.id = 1;
  n1.alpha = ones_offdiag(3);
  n1.sigma = ones_offdiag(3);
  net.internal_nodes.push_back(n1);
  InternalNode n2;
  n2.id = 2;
  n2.alpha = ones_offdiag(2);
  n2.sigma = ones_offdiag(2);
  net.internal_nodes.push_back(n2);
  for (NodeId id : {101, 102, 103}) net.external_nodes.push_back({id, -1, -1, 0});
  validate_network_or_throw(net);

  auto side = exit_side_set(net, 3);
  CHECK(side == std::vector<NodeId>{101, 102});
}

TEST_CASE("exit side sets partition the exits of acyclic graphs") {
  Network net = path3();
  for (const Arc& a : net.arcs) {
    if (!net.is_internal(a.from) || !net.is_internal(a.to)) continue;
    auto start_side = exit_side_set(net, a.id);
    // Independent flood from the other endpoint.
    std::set<NodeId> seen{a.to};
    std::queue<NodeId> q;
    q.push(a.to);
    std::vector<NodeId> end_side;
    while (!q.empty()) {
      NodeId cur = q.front();
      q.pop();
      for (const Arc& e : net.arcs) {
        if (e.id == a.id) continue;
        NodeId other = e.from == cur ? e.to : (e.to == cur ? e.from : -1);
        if (other < 0 || seen.count(other)) continue;
        seen.insert(other);
        if (net.is_internal(other))
          q.push(other);
        else
          end_side.push_back(other);
      }
    }
    std::set<NodeId> all;
    for (const auto& e : net.external_nodes) all.insert(e.id);
    std::set<NodeId> joined(start_side.begin(), start_side.end());
    for (NodeId id : end_side) {
      CHECK_FALSE(joined.count(id));
      joined.insert(id);
    }
    CHECK(joined == all);
  }
}

TEST_CASE("spanning order") {
  SUBCASE("single internal node") {
    Network net = star3();
    REQUIRE(net.spanning.size() == 1);
    CHECK(net.spanning[0].node == 1);
    CHECK(net.spanning[0].parent_arc == -1);
  }
  SUBCASE("two-node path names the connecting arc") {
    Network net = path3();
    REQUIRE(net.spanning.size() == 2);
    CHECK(net.spanning[0].node == 1);
    CHECK(net.spanning[1].node == 2);
    CHECK(net.spanning[1].parent_arc == 2);
    CHECK(net.spanning[1].parent == 1);
  }
  SUBCASE("five internal nodes in hand-checked BFS order") {
    Network net;
    ArcParams p = params();
    net.arcs.push_back({10, 1, 2, p});
    net.arcs.push_back({11, 1, 3, p});
    net.arcs.push_back({12, 2, 4, p});
    net.arcs.push_back({13, 2, 5, p});
    net.arcs.push_back({14, 3, 103, p});
    net.arcs.push_back({15, 4, 104, p});
    net.arcs.push_back({16, 5, 105, p});
    net.arcs.push_back({17, 101, 1, p});
    for (NodeId id : {1, 2}) {
      InternalNode n;
      n.id = id;
      n.alpha = ones_offdiag(3);
      n.sigma = ones_offdiag(3);
      net.internal_nodes.push_back(n);
    }
    for (NodeId id : {3, 4, 5}) {
      InternalNode n;
      n.id = id;
      n.alpha = ones_offdiag(2);
      n.sigma = ones_offdiag(2);
      net.internal_nodes.push_back(n);
    }
    for (NodeId id : {101, 103, 104, 105}) net.external_nodes.push_back({id, -1, -1, 0});
    validate_network_or_throw(net);

    std::vector<NodeId> order;
    std::set<NodeId> visited;
    for (const auto& e : net.spanning) {
      order.push_back(e.node);
      CHECK(visited.insert(e.node).second);  // each node exactly once
    }
    CHECK(order == std::vector<NodeId>{1, 2, 3, 4, 5});
    CHECK(net.spanning[1].parent_arc == 10);
    CHECK(net.spanning[2].parent_arc == 11);
    CHECK(net.spanning[3].parent_arc == 12);
    CHECK(net.spanning[4].parent_arc == 13);
  }
  SUBCASE("cyclic graphs are rejected") {
    Config cfg = load_config(fixture("cyclic_tri.json"));
    Network net = build_network(cfg);
    CHECK_FALSE(net.acyclic);
    CHECK_THROWS_AS(spanning_order(net), std::invalid_argument);
    CHECK_THROWS_AS(exit_side_set(net, 4), std::invalid_argument);
  }
}

TEST_CASE("parameter bounds are enforced") {
  ArcParams p = params();
  p.grid_cells = 3;
  CHECK_THROWS_AS(single_arc(p), ValidationError);
  p = params();
  p.lambda = 0;
  CHECK_THROWS_AS(single_arc(p), ValidationError);
  p = params();
  p.production = -1;
  CHECK_THROWS_AS(single_arc(p), ValidationError);
}

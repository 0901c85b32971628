#include "netchemo/graph.hpp"

#include <algorithm>
#include <map>
#include <queue>
#include <set>
#include <sstream>

namespace netchemo {

int InternalNode::local_index(ArcId a) const {
  auto it = std::find(incident.begin(), incident.end(), a);
  if (it == incident.end())
    throw std::out_of_range("arc " + std::to_string(a) + " not incident to node " +
                            std::to_string(id));
  return static_cast<int>(it - incident.begin());
}

const Arc& Network::arc(ArcId id) const { return arcs[arc_index(id)]; }

int Network::arc_index(ArcId id) const {
  auto it = std::lower_bound(arcs.begin(), arcs.end(), id,
                             [](const Arc& a, ArcId v) { return a.id < v; });
  if (it == arcs.end() || it->id != id)
    throw std::out_of_range("unknown arc id " + std::to_string(id));
  return static_cast<int>(it - arcs.begin());
}

const InternalNode& Network::internal_node(NodeId id) const {
  for (const auto& n : internal_nodes)
    if (n.id == id) return n;
  throw std::out_of_range("unknown internal node id " + std::to_string(id));
}

const ExternalNode& Network::external_node(NodeId id) const {
  for (const auto& n : external_nodes)
    if (n.id == id) return n;
  throw std::out_of_range("unknown external node id " + std::to_string(id));
}

bool Network::is_internal(NodeId id) const {
  for (const auto& n : internal_nodes)
    if (n.id == id) return true;
  return false;
}

int Network::delta(NodeId n, ArcId a) const {
  const Arc& e = arc(a);
  if (e.to == n) return 1;
  if (e.from == n) return -1;
  throw std::out_of_range("arc " + std::to_string(a) + " not incident to node " +
                          std::to_string(n));
}

double Network::total_length() const {
  double s = 0;
  for (const auto& a : arcs) s += a.par.length;
  return s;
}

bool ValidationReport::ok() const {
  return std::none_of(issues.begin(), issues.end(),
                      [](const ValidationIssue& i) { return i.fatal; });
}

std::string ValidationReport::to_string() const {
  std::ostringstream os;
  for (const auto& i : issues) os << (i.fatal ? "error: " : "warning: ") << i.message << "\n";
  os << "connected: " << (connected ? "yes" : "no") << "\n";
  os << "acyclic: " << (acyclic ? "yes" : "no") << "\n";
  os << "condition (nd): " << (nd_ok ? "satisfied" : "violated") << "\n";
  return os.str();
}

namespace {

struct UnionFind {
  std::map<NodeId, NodeId> parent;
  NodeId find(NodeId x) {
    auto it = parent.find(x);
    if (it == parent.end()) {
      parent[x] = x;
      return x;
    }
    if (it->second == x) return x;
    return it->second = find(it->second);
  }
  void unite(NodeId a, NodeId b) { parent[find(a)] = find(b); }
};

bool symmetric_nonneg(const Eigen::MatrixXd& m) {
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) {
      if (m(i, j) < 0) return false;
      if (m(i, j) != m(j, i)) return false;
    }
  return true;
}

}  // namespace

ValidationReport validate_network(Network& net) {
  ValidationReport rep;
  auto fatal = [&](const std::string& m) { rep.issues.push_back({true, m}); };
  auto warn = [&](const std::string& m) { rep.issues.push_back({false, m}); };

  std::set<NodeId> internal_ids, external_ids;
  for (const auto& n : net.internal_nodes) internal_ids.insert(n.id);
  for (const auto& n : net.external_nodes) external_ids.insert(n.id);
  for (NodeId id : internal_ids)
    if (external_ids.count(id)) fatal("node " + std::to_string(id) + " is both internal and external");

  if (net.external_nodes.empty()) fatal("no external nodes");

  // Arc sanity and incidence counts.
  std::map<NodeId, std::vector<ArcId>> touch;
  std::set<ArcId> arc_ids;
  for (const auto& a : net.arcs) {
    if (!arc_ids.insert(a.id).second) fatal("duplicate arc id " + std::to_string(a.id));
    if (a.from == a.to) fatal("arc " + std::to_string(a.id) + " is a self-loop");
    for (NodeId n : {a.from, a.to}) {
      if (!internal_ids.count(n) && !external_ids.count(n))
        fatal("arc " + std::to_string(a.id) + " references unknown node " + std::to_string(n));
      touch[n].push_back(a.id);
    }
    const ArcParams& p = a.par;
    std::string tag = "arc " + std::to_string(a.id) + ": ";
    if (!(p.length > 0)) fatal(tag + "L must be > 0");
    if (!(p.lambda > 0)) fatal(tag + "lambda must be > 0");
    if (!(p.beta > 0)) fatal(tag + "beta must be > 0");
    if (!(p.diffusion > 0)) fatal(tag + "D must be > 0");
    if (!(p.degradation > 0)) fatal(tag + "b must be > 0");
    if (p.production < 0) fatal(tag + "a must be >= 0");
    if (p.grid_cells < 4) fatal(tag + "cells must be >= 4");
  }
  if (net.arcs.empty()) fatal("network has no arcs");
  if (!rep.ok()) return rep;

  for (const auto& n : net.external_nodes) {
    auto it = touch.find(n.id);
    size_t deg = it == touch.end() ? 0 : it->second.size();
    if (deg != 1)
      fatal("external node " + std::to_string(n.id) + " touches " + std::to_string(deg) +
            " arcs, expected exactly 1");
    if (n.robin_d < 0) fatal("external node " + std::to_string(n.id) + ": d must be >= 0");
  }
  for (auto& n : net.external_nodes) {
    if (touch.count(n.id) && touch[n.id].size() == 1) {
      n.arc = touch[n.id][0];
      n.eta = net.arc(n.arc).to == n.id ? 1 : -1;
    }
  }

  // Internal nodes: incident sets, matrix shape, symmetry, condition (nd).
  rep.nd_ok = true;
  for (auto& n : net.internal_nodes) {
    auto it = touch.find(n.id);
    std::vector<ArcId> inc = it == touch.end() ? std::vector<ArcId>{} : it->second;
    std::sort(inc.begin(), inc.end());
    if (inc.size() < 2)
      fatal("internal node " + std::to_string(n.id) + " has degree " +
            std::to_string(inc.size()) + ", expected >= 2");
    if (!n.incident.empty() && n.incident != inc)
      fatal("transmission block at node " + std::to_string(n.id) +
            " does not list the incident arcs");
    n.incident = inc;
    const int m = static_cast<int>(inc.size());
    if (n.alpha.rows() != m || n.alpha.cols() != m)
      fatal("alpha matrix at node " + std::to_string(n.id) + " has wrong size");
    else if (!symmetric_nonneg(n.alpha))
      fatal("alpha not symmetric nonnegative at node " + std::to_string(n.id));
    if (n.sigma.rows() != m || n.sigma.cols() != m)
      fatal("sigma matrix at node " + std::to_string(n.id) + " has wrong size");
    else if (!symmetric_nonneg(n.sigma))
      fatal("sigma not symmetric at node " + std::to_string(n.id));

    // Pivot rule: smallest arc id k with sigma_{ik} != 0 for all i != k.
    n.pivot = -1;
    if (n.sigma.rows() == m) {
      for (int k = 0; k < m && n.pivot < 0; ++k) {
        bool ok = true;
        for (int i = 0; i < m; ++i)
          if (i != k && n.sigma(i, k) == 0) ok = false;
        if (ok) n.pivot = inc[k];
      }
    }
    if (n.pivot < 0) {
      rep.nd_ok = false;
      warn("condition (nd) violated at node " + std::to_string(n.id) +
           " (no admissible pivot; stationary solver unavailable)");
    }
  }
  if (!rep.ok()) return rep;

  // Connectivity and the cycle count.
  UnionFind uf;
  for (const auto& n : net.internal_nodes) uf.find(n.id);
  for (const auto& n : net.external_nodes) uf.find(n.id);
  for (const auto& a : net.arcs) uf.unite(a.from, a.to);
  std::set<NodeId> roots;
  for (auto& [id, _] : uf.parent) roots.insert(uf.find(id));
  rep.connected = roots.size() == 1;
  if (!rep.connected) fatal("graph is not connected");

  const size_t n_nodes = net.internal_nodes.size() + net.external_nodes.size();
  rep.acyclic = rep.connected && net.arcs.size() + 1 == n_nodes;
  net.acyclic = rep.acyclic;
  if (!rep.acyclic && rep.connected)
    warn("graph contains cycles; stationary solver unavailable");
  rep.has_external = !net.external_nodes.empty();

  if (!net.internal_nodes.empty()) {
    net.root = net.internal_nodes.front().id;  // ids are kept sorted
    for (const auto& n : net.internal_nodes) net.root = std::min(net.root, n.id);
    if (net.acyclic) net.spanning = spanning_order(net);
  }
  return rep;
}

void validate_network_or_throw(Network& net) {
  ValidationReport rep = validate_network(net);
  if (!rep.ok()) {
    std::string msg;
    for (const auto& i : rep.issues)
      if (i.fatal) msg += (msg.empty() ? "" : "; ") + i.message;
    throw ValidationError(msg);
  }
}

std::vector<NodeId> exit_side_set(const Network& net, ArcId iota) {
  if (!net.acyclic) throw std::invalid_argument("exit_side_set requires an acyclic network");
  const Arc& a = net.arc(iota);
  if (!net.is_internal(a.from) || !net.is_internal(a.to))
    throw std::invalid_argument("exit_side_set requires an internal arc");

  // Flood from the start node without crossing iota.
  std::set<NodeId> seen{a.from};
  std::queue<NodeId> q;
  q.push(a.from);
  std::vector<NodeId> exits;
  while (!q.empty()) {
    NodeId cur = q.front();
    q.pop();
    for (const auto& e : net.arcs) {
      if (e.id == iota) continue;
      NodeId other;
      if (e.from == cur)
        other = e.to;
      else if (e.to == cur)
        other = e.from;
      else
        continue;
      if (!seen.insert(other).second) continue;
      if (net.is_internal(other))
        q.push(other);
      else
        exits.push_back(other);
    }
  }
  std::sort(exits.begin(), exits.end());
  return exits;
}

std::vector<SpanningEntry> spanning_order(const Network& net, std::optional<NodeId> root) {
  if (!net.acyclic) throw std::invalid_argument("spanning_order requires an acyclic network");
  if (net.internal_nodes.empty())
    throw std::invalid_argument("spanning_order requires an internal node");
  NodeId r = root.value_or(net.root);
  if (!net.is_internal(r)) throw std::invalid_argument("root must be an internal node");

  std::vector<SpanningEntry> order;
  std::set<NodeId> seen{r};
  std::queue<NodeId> q;
  q.push(r);
  order.push_back({r, -1, -1});
  while (!q.empty()) {
    NodeId cur = q.front();
    q.pop();
    // Neighbors through arcs whose both endpoints are internal, in arc-id order.
    for (const auto& e : net.arcs) {
      NodeId other;
      if (e.from == cur)
        other = e.to;
      else if (e.to == cur)
        other = e.from;
      else
        continue;
      if (!net.is_internal(other) || seen.count(other)) continue;
      seen.insert(other);
      order.push_back({other, e.id, cur});
      q.push(other);
    }
  }
  if (order.size() != net.internal_nodes.size())
    throw std::logic_error("internal nodes are not mutually connected");
  return order;
}

}  // namespace netchemo

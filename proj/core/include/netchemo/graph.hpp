#pragma once

#include <Eigen/Dense>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace netchemo {

using ArcId = int;
using NodeId = int;

/// Physical parameters of one arc, viewed as the interval (0, L).
struct ArcParams {
  double length = 1.0;       // L_i > 0
  double lambda = 1.0;       // wave speed, > 0
  double beta = 1.0;         // friction, > 0
  double diffusion = 1.0;    // D_i > 0
  double production = 0.0;   // a_i >= 0
  double degradation = 1.0;  // b_i > 0
  int grid_cells = 64;       // >= 4
};

struct Arc {
  ArcId id = -1;
  NodeId from = -1;  // orientation is from -> to; x=0 at `from`, x=L at `to`
  NodeId to = -1;
  ArcParams par;
};

/// Inner node with Kedem-Katchalsky coupling matrices over its incident arcs.
struct InternalNode {
  NodeId id = -1;
  std::vector<ArcId> incident;  // M^nu, sorted ascending; matrix index order
  Eigen::MatrixXd alpha;        // psi coupling, symmetric >= 0
  Eigen::MatrixXd sigma;        // (u,v) coupling, symmetric >= 0
  ArcId pivot = -1;             // k_nu from condition (nd); -1 if none exists

  int local_index(ArcId a) const;
};

struct ExternalNode {
  NodeId id = -1;
  ArcId arc = -1;     // the single incident arc i(j)
  int eta = 0;        // +1 if the arc ends here, -1 if it starts here
  double robin_d = 0; // d_j >= 0
};

struct SpanningEntry {
  NodeId node = -1;
  ArcId parent_arc = -1;   // arc linking to the parent internal node; -1 at root
  NodeId parent = -1;      // -1 at root
};

/// Validated metric graph. Immutable after construction; shared reads are safe.
class Network {
public:
  std::vector<Arc> arcs;                     // sorted by id
  std::vector<InternalNode> internal_nodes;  // sorted by id
  std::vector<ExternalNode> external_nodes;  // sorted by id
  bool acyclic = false;
  NodeId root = -1;                          // smallest internal node id
  std::vector<SpanningEntry> spanning;       // BFS order from root

  const Arc& arc(ArcId id) const;
  int arc_index(ArcId id) const;
  const InternalNode& internal_node(NodeId id) const;
  const ExternalNode& external_node(NodeId id) const;
  bool is_internal(NodeId id) const;

  /// +1 if arc a points into node n, -1 if it leaves n.
  int delta(NodeId n, ArcId a) const;

  /// Sum of arc lengths |A|.
  double total_length() const;

  /// Grid spacing of an arc.
  double spacing(ArcId id) const { return arc(id).par.length / arc(id).par.grid_cells; }
};

struct ValidationIssue {
  bool fatal = false;
  std::string message;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;
  bool connected = false;
  bool acyclic = false;
  bool has_external = false;
  bool nd_ok = true;  // condition (nd) at every internal node

  bool ok() const;
  std::string to_string() const;
};

class ValidationError : public std::runtime_error {
public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

/// Checks symmetry/nonnegativity of the coupling matrices, condition (nd)
/// (recording a pivot per node), connectivity, boundary presence and the
/// acyclicity flag. Fatal issues make the network unusable; an (nd) failure
/// is a warning here and an error only in the stationary solver.
ValidationReport validate_network(Network& net);

/// validate_network + throw ValidationError on any fatal issue.
void validate_network_or_throw(Network& net);

/// External nodes linked to the start node of internal arc `iota` by paths
/// not covering `iota`. Requires an acyclic network and an internal arc.
std::vector<NodeId> exit_side_set(const Network& net, ArcId iota);

/// BFS order of the internal nodes with parent arcs, rooted at `root`
/// (default: net.root). Requires an acyclic network.
std::vector<SpanningEntry> spanning_order(const Network& net,
                                          std::optional<NodeId> root = std::nullopt);

}  // namespace netchemo

#pragma once

#include "netchemo/boundary.hpp"
#include "netchemo/expr.hpp"
#include "netchemo/graph.hpp"

#include <array>
#include <map>
#include <optional>
#include <string>
#include <variant>

namespace netchemo {

class ConfigError : public std::runtime_error {
public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct NodeDecl {
  NodeId id = -1;
  bool internal = false;
  std::optional<std::array<double, 2>> pos;  // plotting metadata only
};

struct ArcDecl {
  ArcId id = -1;
  NodeId from = -1, to = -1;
  ArcParams par;
};

struct TransmissionDecl {
  NodeId node = -1;
  std::vector<ArcId> arcs;  // index order of the matrices
  Eigen::MatrixXd alpha, sigma;
};

/// Per-arc initial value: a constant or an expression of x (and L).
using FieldInit = std::variant<double, Expression>;

struct InitialSpec {
  enum class Kind { Zero, PerArc, StationaryPerturbation } kind = Kind::Zero;
  std::map<ArcId, FieldInit> u, v, psi;  // PerArc; missing arcs default to 0
  double amplitude = 0;                  // StationaryPerturbation
  bool randomize = false;
};

struct ExperimentSpec {
  double t_final = 10;
  double output_every = 0.1;
  double tol = 1e-10;
  unsigned seed = 1;
  double mu_s = 0;
  double K2bar = 1.0;
  std::vector<double> snapshot_times;
};

struct Config {
  std::vector<NodeDecl> nodes;
  std::vector<ArcDecl> arcs;
  std::vector<TransmissionDecl> transmission;
  std::vector<ExitData> boundary;  // d, W, P per external node
  InitialSpec initial;
  ExperimentSpec experiment;

  bool operator==(const Config& other) const;
};

/// Parses the structured-text configuration; schema violations name the
/// offending key.
Config parse_config(const std::string& text);
Config load_config(const std::string& path);

/// Canonical serialization; parse(emit(c)) == c.
std::string emit_config(const Config& cfg);

/// Semantic network with validate_network run; throws on fatal issues.
Network build_network(const Config& cfg);
BoundarySpec build_boundary(const Config& cfg);

/// Convenience used by the CLI: parse + build + validate.
Network parse_network(const std::string& config_text);

/// Evaluate an initial field at an arc coordinate (0 when unspecified).
double eval_field_init(const std::map<ArcId, FieldInit>& f, ArcId arc, double x, double L);

}  // namespace netchemo

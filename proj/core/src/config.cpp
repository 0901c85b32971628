#include "netchemo/config.hpp"

#include <algorithm>
#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

namespace netchemo {

using nlohmann::json;

namespace {

const json& require(const json& obj, const std::string& key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key))
    throw ConfigError("missing key '" + key + "' in " + where);
  return obj.at(key);
}

double num(const json& v, const std::string& where) {
  if (!v.is_number()) throw ConfigError("expected a number at " + where);
  return v.get<double>();
}

DecaySignal parse_signal(const json& v, const std::string& where) {
  DecaySignal s;
  if (v.is_number()) {
    s.inf = v.get<double>();
    return s;
  }
  if (!v.is_object()) throw ConfigError("expected a number or {inf,amp,rate} at " + where);
  if (v.contains("inf")) s.inf = num(v.at("inf"), where + ".inf");
  if (v.contains("amp")) s.amp = num(v.at("amp"), where + ".amp");
  if (v.contains("rate")) s.rate = num(v.at("rate"), where + ".rate");
  return s;
}

Eigen::MatrixXd parse_matrix(const json& v, size_t n, const std::string& where) {
  if (!v.is_array() || v.size() != n)
    throw ConfigError("expected a " + std::to_string(n) + "x" + std::to_string(n) +
                      " matrix at " + where);
  Eigen::MatrixXd m(n, n);
  for (size_t i = 0; i < n; ++i) {
    const json& row = v.at(i);
    if (!row.is_array() || row.size() != n)
      throw ConfigError("row " + std::to_string(i) + " of " + where + " has the wrong length");
    for (size_t j = 0; j < n; ++j) m(i, j) = num(row.at(j), where);
  }
  return m;
}

std::map<ArcId, FieldInit> parse_field(const json& v, const std::string& where) {
  std::map<ArcId, FieldInit> out;
  if (!v.is_object()) throw ConfigError("expected per-arc values at " + where);
  for (auto it = v.begin(); it != v.end(); ++it) {
    ArcId id = std::stoi(it.key());
    if (it.value().is_number())
      out.emplace(id, it.value().get<double>());
    else if (it.value().is_string())
      out.emplace(id, Expression::parse(it.value().get<std::string>()));
    else
      throw ConfigError("expected a number or expression string at " + where + "." + it.key());
  }
  return out;
}

json emit_field(const std::map<ArcId, FieldInit>& f) {
  json out = json::object();
  for (const auto& [id, v] : f) {
    if (std::holds_alternative<double>(v))
      out[std::to_string(id)] = std::get<double>(v);
    else
      out[std::to_string(id)] = std::get<Expression>(v).text();
  }
  return out;
}

json emit_signal(const DecaySignal& s) {
  return json{{"inf", s.inf}, {"amp", s.amp}, {"rate", s.rate}};
}

bool field_eq(const std::map<ArcId, FieldInit>& a, const std::map<ArcId, FieldInit>& b) {
  if (a.size() != b.size()) return false;
  for (auto ia = a.begin(), ib = b.begin(); ia != a.end(); ++ia, ++ib) {
    if (ia->first != ib->first) return false;
    if (ia->second.index() != ib->second.index()) return false;
    if (std::holds_alternative<double>(ia->second)) {
      if (std::get<double>(ia->second) != std::get<double>(ib->second)) return false;
    } else if (std::get<Expression>(ia->second).text() !=
               std::get<Expression>(ib->second).text()) {
      return false;
    }
  }
  return true;
}

}  // namespace

bool Config::operator==(const Config& o) const {
  auto node_eq = [](const NodeDecl& a, const NodeDecl& b) {
    return a.id == b.id && a.internal == b.internal && a.pos == b.pos;
  };
  auto arc_eq = [](const ArcDecl& a, const ArcDecl& b) {
    const ArcParams &p = a.par, &q = b.par;
    return a.id == b.id && a.from == b.from && a.to == b.to && p.length == q.length &&
           p.lambda == q.lambda && p.beta == q.beta && p.diffusion == q.diffusion &&
           p.production == q.production && p.degradation == q.degradation &&
           p.grid_cells == q.grid_cells;
  };
  auto tr_eq = [](const TransmissionDecl& a, const TransmissionDecl& b) {
    return a.node == b.node && a.arcs == b.arcs && a.alpha == b.alpha && a.sigma == b.sigma;
  };
  auto sig_eq = [](const DecaySignal& a, const DecaySignal& b) {
    return a.inf == b.inf && a.amp == b.amp && a.rate == b.rate;
  };
  auto ex_eq = [&](const ExitData& a, const ExitData& b) {
    return a.exit == b.exit && a.robin_d == b.robin_d && sig_eq(a.W, b.W) && sig_eq(a.P, b.P);
  };
  if (nodes.size() != o.nodes.size() || arcs.size() != o.arcs.size() ||
      transmission.size() != o.transmission.size() || boundary.size() != o.boundary.size())
    return false;
  for (size_t i = 0; i < nodes.size(); ++i)
    if (!node_eq(nodes[i], o.nodes[i])) return false;
  for (size_t i = 0; i < arcs.size(); ++i)
    if (!arc_eq(arcs[i], o.arcs[i])) return false;
  for (size_t i = 0; i < transmission.size(); ++i)
    if (!tr_eq(transmission[i], o.transmission[i])) return false;
  for (size_t i = 0; i < boundary.size(); ++i)
    if (!ex_eq(boundary[i], o.boundary[i])) return false;
  if (initial.kind != o.initial.kind || initial.amplitude != o.initial.amplitude ||
      initial.randomize != o.initial.randomize)
    return false;
  if (!field_eq(initial.u, o.initial.u) || !field_eq(initial.v, o.initial.v) ||
      !field_eq(initial.psi, o.initial.psi))
    return false;
  const ExperimentSpec &e = experiment, &f = o.experiment;
  return e.t_final == f.t_final && e.output_every == f.output_every && e.tol == f.tol &&
         e.seed == f.seed && e.mu_s == f.mu_s && e.K2bar == f.K2bar &&
         e.snapshot_times == f.snapshot_times;
}

Config parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  Config cfg;

  for (const json& jn : require(j, "nodes", "config")) {
    NodeDecl n;
    n.id = static_cast<NodeId>(num(require(jn, "id", "nodes[]"), "nodes[].id"));
    const std::string kind = require(jn, "kind", "nodes[]").get<std::string>();
    if (kind == "internal")
      n.internal = true;
    else if (kind == "external")
      n.internal = false;
    else
      throw ConfigError("nodes[].kind must be 'internal' or 'external', got '" + kind + "'");
    if (jn.contains("pos")) {
      const json& p = jn.at("pos");
      if (!p.is_array() || p.size() != 2) throw ConfigError("nodes[].pos must be [x, y]");
      n.pos = {num(p.at(0), "pos"), num(p.at(1), "pos")};
    }
    cfg.nodes.push_back(n);
  }
  std::sort(cfg.nodes.begin(), cfg.nodes.end(),
            [](const NodeDecl& a, const NodeDecl& b) { return a.id < b.id; });

  for (const json& ja : require(j, "arcs", "config")) {
    ArcDecl a;
    const std::string where = "arcs[]";
    a.id = static_cast<ArcId>(num(require(ja, "id", where), where + ".id"));
    a.from = static_cast<NodeId>(num(require(ja, "from", where), where + ".from"));
    a.to = static_cast<NodeId>(num(require(ja, "to", where), where + ".to"));
    a.par.length = num(require(ja, "L", where), where + ".L");
    a.par.lambda = num(require(ja, "lambda", where), where + ".lambda");
    a.par.beta = num(require(ja, "beta", where), where + ".beta");
    a.par.diffusion = num(require(ja, "D", where), where + ".D");
    a.par.production = num(require(ja, "a", where), where + ".a");
    a.par.degradation = num(require(ja, "b", where), where + ".b");
    a.par.grid_cells = static_cast<int>(num(require(ja, "cells", where), where + ".cells"));
    cfg.arcs.push_back(a);
  }
  std::sort(cfg.arcs.begin(), cfg.arcs.end(),
            [](const ArcDecl& a, const ArcDecl& b) { return a.id < b.id; });

  if (j.contains("transmission")) {
    const json& jt = j.at("transmission");
    if (!jt.is_object()) throw ConfigError("'transmission' must map node ids to blocks");
    for (auto it = jt.begin(); it != jt.end(); ++it) {
      TransmissionDecl t;
      t.node = std::stoi(it.key());
      const std::string where = "transmission." + it.key();
      for (const json& a : require(it.value(), "arcs", where))
        t.arcs.push_back(static_cast<ArcId>(num(a, where + ".arcs")));
      t.alpha = parse_matrix(require(it.value(), "alpha", where), t.arcs.size(),
                             where + ".alpha");
      t.sigma = parse_matrix(require(it.value(), "sigma", where), t.arcs.size(),
                             where + ".sigma");
      cfg.transmission.push_back(t);
    }
    std::sort(cfg.transmission.begin(), cfg.transmission.end(),
              [](const TransmissionDecl& a, const TransmissionDecl& b) {
                return a.node < b.node;
              });
  }

  if (j.contains("boundary")) {
    const json& jb = j.at("boundary");
    if (!jb.is_object()) throw ConfigError("'boundary' must map exit ids to data");
    for (auto it = jb.begin(); it != jb.end(); ++it) {
      ExitData e;
      e.exit = std::stoi(it.key());
      const std::string where = "boundary." + it.key();
      if (it.value().contains("d")) e.robin_d = num(it.value().at("d"), where + ".d");
      if (it.value().contains("W")) e.W = parse_signal(it.value().at("W"), where + ".W");
      if (it.value().contains("P")) e.P = parse_signal(it.value().at("P"), where + ".P");
      cfg.boundary.push_back(e);
    }
    std::sort(cfg.boundary.begin(), cfg.boundary.end(),
              [](const ExitData& a, const ExitData& b) { return a.exit < b.exit; });
  }

  if (j.contains("initial")) {
    const json& ji = j.at("initial");
    const std::string kind = require(ji, "kind", "initial").get<std::string>();
    if (kind == "zero")
      cfg.initial.kind = InitialSpec::Kind::Zero;
    else if (kind == "per_arc")
      cfg.initial.kind = InitialSpec::Kind::PerArc;
    else if (kind == "stationary_perturbation")
      cfg.initial.kind = InitialSpec::Kind::StationaryPerturbation;
    else
      throw ConfigError("initial.kind must be zero|per_arc|stationary_perturbation");
    if (ji.contains("u")) cfg.initial.u = parse_field(ji.at("u"), "initial.u");
    if (ji.contains("v")) cfg.initial.v = parse_field(ji.at("v"), "initial.v");
    if (ji.contains("psi")) cfg.initial.psi = parse_field(ji.at("psi"), "initial.psi");
    if (ji.contains("amplitude"))
      cfg.initial.amplitude = num(ji.at("amplitude"), "initial.amplitude");
    if (cfg.initial.amplitude < 0) throw ConfigError("initial.amplitude must be >= 0");
    if (ji.contains("randomize")) cfg.initial.randomize = ji.at("randomize").get<bool>();
  }

  if (j.contains("experiment")) {
    const json& je = j.at("experiment");
    ExperimentSpec& e = cfg.experiment;
    if (je.contains("t_final")) e.t_final = num(je.at("t_final"), "experiment.t_final");
    if (je.contains("output_every"))
      e.output_every = num(je.at("output_every"), "experiment.output_every");
    if (je.contains("tol")) e.tol = num(je.at("tol"), "experiment.tol");
    if (je.contains("seed"))
      e.seed = static_cast<unsigned>(num(je.at("seed"), "experiment.seed"));
    if (je.contains("mu_s")) e.mu_s = num(je.at("mu_s"), "experiment.mu_s");
    if (je.contains("K2bar")) e.K2bar = num(je.at("K2bar"), "experiment.K2bar");
    if (je.contains("snapshot_times"))
      for (const json& t : je.at("snapshot_times"))
        e.snapshot_times.push_back(num(t, "experiment.snapshot_times"));
    if (!(e.t_final > 0)) throw ConfigError("experiment.t_final must be > 0");
    if (!(e.output_every > 0)) throw ConfigError("experiment.output_every must be > 0");
  }
  return cfg;
}

Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string emit_config(const Config& cfg) {
  json j;
  j["nodes"] = json::array();
  for (const auto& n : cfg.nodes) {
    json jn{{"id", n.id}, {"kind", n.internal ? "internal" : "external"}};
    if (n.pos) jn["pos"] = {(*n.pos)[0], (*n.pos)[1]};
    j["nodes"].push_back(jn);
  }
  j["arcs"] = json::array();
  for (const auto& a : cfg.arcs)
    j["arcs"].push_back(json{{"id", a.id},
                             {"from", a.from},
                             {"to", a.to},
                             {"L", a.par.length},
                             {"lambda", a.par.lambda},
                             {"beta", a.par.beta},
                             {"D", a.par.diffusion},
                             {"a", a.par.production},
                             {"b", a.par.degradation},
                             {"cells", a.par.grid_cells}});
  json jt = json::object();
  for (const auto& t : cfg.transmission) {
    json rows_a = json::array(), rows_s = json::array();
    for (int i = 0; i < t.alpha.rows(); ++i) {
      json ra = json::array(), rs = json::array();
      for (int k = 0; k < t.alpha.cols(); ++k) {
        ra.push_back(t.alpha(i, k));
        rs.push_back(t.sigma(i, k));
      }
      rows_a.push_back(ra);
      rows_s.push_back(rs);
    }
    jt[std::to_string(t.node)] = json{{"arcs", t.arcs}, {"alpha", rows_a}, {"sigma", rows_s}};
  }
  j["transmission"] = jt;
  json jb = json::object();
  for (const auto& e : cfg.boundary)
    jb[std::to_string(e.exit)] =
        json{{"d", e.robin_d}, {"W", emit_signal(e.W)}, {"P", emit_signal(e.P)}};
  j["boundary"] = jb;

  json ji;
  switch (cfg.initial.kind) {
    case InitialSpec::Kind::Zero: ji["kind"] = "zero"; break;
    case InitialSpec::Kind::PerArc: ji["kind"] = "per_arc"; break;
    case InitialSpec::Kind::StationaryPerturbation:
      ji["kind"] = "stationary_perturbation";
      break;
  }
  if (!cfg.initial.u.empty()) ji["u"] = emit_field(cfg.initial.u);
  if (!cfg.initial.v.empty()) ji["v"] = emit_field(cfg.initial.v);
  if (!cfg.initial.psi.empty()) ji["psi"] = emit_field(cfg.initial.psi);
  if (cfg.initial.amplitude != 0) ji["amplitude"] = cfg.initial.amplitude;
  if (cfg.initial.randomize) ji["randomize"] = true;
  j["initial"] = ji;

  const ExperimentSpec& e = cfg.experiment;
  json je{{"t_final", e.t_final}, {"output_every", e.output_every}, {"tol", e.tol},
          {"seed", e.seed},       {"mu_s", e.mu_s},                 {"K2bar", e.K2bar}};
  if (!e.snapshot_times.empty()) je["snapshot_times"] = e.snapshot_times;
  j["experiment"] = je;
  return j.dump(2) + "\n";
}

Network build_network(const Config& cfg) {
  Network net;
  std::set<NodeId> internal_ids;
  for (const auto& n : cfg.nodes) {
    if (n.internal) {
      InternalNode in;
      in.id = n.id;
      net.internal_nodes.push_back(in);
      internal_ids.insert(n.id);
    } else {
      ExternalNode en;
      en.id = n.id;
      net.external_nodes.push_back(en);
    }
  }
  for (const auto& a : cfg.arcs) {
    Arc arc;
    arc.id = a.id;
    arc.from = a.from;
    arc.to = a.to;
    arc.par = a.par;
    net.arcs.push_back(arc);
  }
  for (const auto& t : cfg.transmission) {
    bool found = false;
    for (auto& n : net.internal_nodes)
      if (n.id == t.node) {
        std::vector<ArcId> sorted = t.arcs;
        std::sort(sorted.begin(), sorted.end());
        // Reorder the matrices into ascending arc-id order.
        const size_t m = t.arcs.size();
        Eigen::MatrixXd alpha(m, m), sigma(m, m);
        for (size_t i = 0; i < m; ++i)
          for (size_t k = 0; k < m; ++k) {
            auto pi = std::find(t.arcs.begin(), t.arcs.end(), sorted[i]) - t.arcs.begin();
            auto pk = std::find(t.arcs.begin(), t.arcs.end(), sorted[k]) - t.arcs.begin();
            alpha(i, k) = t.alpha(pi, pk);
            sigma(i, k) = t.sigma(pi, pk);
          }
        n.incident = sorted;
        n.alpha = alpha;
        n.sigma = sigma;
        found = true;
      }
    if (!found)
      throw ConfigError("transmission block references unknown internal node " +
                        std::to_string(t.node));
  }
  for (auto& n : net.internal_nodes)
    if (n.incident.empty())
      throw ConfigError("missing transmission block for internal node " + std::to_string(n.id));
  for (auto& e : net.external_nodes)
    for (const auto& b : cfg.boundary)
      if (b.exit == e.id) e.robin_d = b.robin_d;

  validate_network_or_throw(net);
  return net;
}

BoundarySpec build_boundary(const Config& cfg) {
  BoundarySpec bc;
  bc.exits = cfg.boundary;
  for (const auto& n : cfg.nodes) {
    if (n.internal) continue;
    bool have = false;
    for (const auto& e : bc.exits) have = have || e.exit == n.id;
    if (!have) {
      ExitData e;
      e.exit = n.id;
      bc.exits.push_back(e);
    }
  }
  std::sort(bc.exits.begin(), bc.exits.end(),
            [](const ExitData& a, const ExitData& b) { return a.exit < b.exit; });
  return bc;
}

Network parse_network(const std::string& config_text) {
  return build_network(parse_config(config_text));
}

double eval_field_init(const std::map<ArcId, FieldInit>& f, ArcId arc, double x, double L) {
  auto it = f.find(arc);
  if (it == f.end()) return 0.0;
  if (std::holds_alternative<double>(it->second)) return std::get<double>(it->second);
  return std::get<Expression>(it->second).eval(x, L);
}

}  // namespace netchemo

#include "netchemo/boundary.hpp"

#include <cmath>
#include <set>

namespace netchemo {

double DecaySignal::value(double t) const { return inf + amp * std::exp(-rate * t); }

double DecaySignal::integral(double t) const {
  if (amp == 0) return inf * t;
  return inf * t + amp * (1.0 - std::exp(-rate * t)) / rate;
}

const ExitData& BoundarySpec::at(NodeId exit) const {
  for (const auto& e : exits)
    if (e.exit == exit) return e;
  throw std::out_of_range("no boundary data for exit " + std::to_string(exit));
}

void BoundarySpec::validate(const Network& net) const {
  std::set<NodeId> seen;
  for (const auto& e : exits) {
    net.external_node(e.exit);  // throws on unknown id
    if (!seen.insert(e.exit).second)
      throw ValidationError("duplicate boundary data for exit " + std::to_string(e.exit));
    for (const DecaySignal* s : {&e.W, &e.P})
      if (s->amp != 0 && !(s->rate > 0))
        throw ValidationError("exit " + std::to_string(e.exit) +
                              ": decay rate must be > 0 when the amplitude is nonzero");
    if (e.robin_d < 0)
      throw ValidationError("exit " + std::to_string(e.exit) + ": d must be >= 0");
  }
  for (const auto& n : net.external_nodes)
    if (!seen.count(n.id))
      throw ValidationError("missing boundary data for exit " + std::to_string(n.id));
}

double BoundarySpec::total_w_inf() const {
  double s = 0;
  for (const auto& e : exits) s += e.W.inf;
  return s;
}

}  // namespace netchemo

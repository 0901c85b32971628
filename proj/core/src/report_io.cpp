#include "netchemo/report_io.hpp"

#include <cstdio>
#include <ostream>

namespace netchemo {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

void write_timeseries_header(std::ostream& os) { os << kTimeSeriesHeader << "\n"; }

void write_timeseries_row(std::ostream& os, const TimeSeriesRow& r) {
  os << format_double(r.t) << "," << format_double(r.mass) << ","
     << format_double(r.mass_residual) << "," << format_double(r.max_node_flux_residual)
     << "," << format_double(r.sup_u) << "," << format_double(r.bound_rhs) << ","
     << format_double(r.dist_u) << "," << format_double(r.dist_v) << ","
     << format_double(r.dist_psi) << "\n";
}

void write_snapshot(std::ostream& os, const Network& net, const SimState& s) {
  os << "arc x u v psi\n";
  for (size_t ai = 0; ai < net.arcs.size(); ++ai) {
    const Arc& arc = net.arcs[ai];
    const double h = arc.par.length / arc.par.grid_cells;
    for (int c = 0; c < arc.par.grid_cells; ++c)
      os << arc.id << " " << format_double((c + 0.5) * h) << " "
         << format_double(s.u[ai](c)) << " " << format_double(s.v[ai](c)) << " "
         << format_double(s.psi[ai](c)) << "\n";
  }
}

void write_profile(std::ostream& os, const Network& net, const StationaryProfile& p) {
  os << "# stationary profile\n";
  os << "mass " << format_double(p.mu_s) << "\n";
  os << "converged " << (p.converged ? 1 : 0) << "\n";
  os << "iterations " << p.iterations << "\n";
  os << "u_nonnegative " << (p.u_nonnegative ? 1 : 0) << "\n";
  os << "residuals " << p.residuals.to_string() << "\n";
  os << "contraction";
  for (double r : p.contraction) os << " " << format_double(r);
  os << "\n";
  for (size_t ai = 0; ai < net.arcs.size(); ++ai) {
    const Arc& arc = net.arcs[ai];
    os << "# arc " << arc.id << " C " << format_double(p.C[ai]) << " V "
       << format_double(p.V[ai]) << "\n";
    os << "x U V Psi\n";
    const ArcGrid g{arc.par.length, arc.par.grid_cells};
    for (int q = 0; q < g.npoints(); ++q)
      os << format_double(g.point(q)) << " " << format_double(p.U[ai](q)) << " "
         << format_double(p.V[ai]) << " " << format_double(p.Psi[ai](q)) << "\n";
  }
}

}  // namespace netchemo

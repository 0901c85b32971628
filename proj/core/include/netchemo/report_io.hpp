#pragma once

#include "netchemo/dynamics.hpp"
#include "netchemo/stationary.hpp"

#include <iosfwd>
#include <string>

namespace netchemo {

inline constexpr const char* kTimeSeriesHeader =
    "t,mass,mass_residual,max_node_flux_residual,sup_u,bound_rhs,"
    "dist_to_stationary_u,dist_to_stationary_v,dist_to_stationary_psi";

struct TimeSeriesRow {
  double t = 0, mass = 0, mass_residual = 0, max_node_flux_residual = 0;
  double sup_u = 0, bound_rhs = 0;
  double dist_u = 0, dist_v = 0, dist_psi = 0;
};

void write_timeseries_header(std::ostream& os);
void write_timeseries_row(std::ostream& os, const TimeSeriesRow& row);

/// One table per requested time: arc id, x, u, v, psi at the cell centers.
void write_snapshot(std::ostream& os, const Network& net, const SimState& s);

/// Per-arc tables (x, U, V, Psi) on the extended grids plus the summary
/// record (C_i, mass, iterations, residuals, contraction ratios).
void write_profile(std::ostream& os, const Network& net, const StationaryProfile& p);

std::string format_double(double v);

}  // namespace netchemo

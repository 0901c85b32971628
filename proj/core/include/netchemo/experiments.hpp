#pragma once

#include "netchemo/config.hpp"
#include "netchemo/dynamics.hpp"
#include "netchemo/report_io.hpp"
#include "netchemo/shooting.hpp"
#include "netchemo/stationary.hpp"

#include <functional>
#include <iosfwd>
#include <limits>
#include <optional>

namespace netchemo {

/// CLI-level overrides applied on top of a parsed config.
struct Overrides {
  std::optional<double> tol;
  std::optional<double> t_final;
  std::optional<int> cells;
  bool dump_matrix = false;
};
void apply_overrides(Config& cfg, const Overrides& o);

SimState initial_state(const Stepper& stepper, const Config& cfg,
                       const StationaryProfile* profile);

/// Cell-centered reference fields of a profile (for distance diagnostics).
ReferenceFields reference_fields(const Network& net, const StationaryProfile& p);
SimState profile_state(const Stepper& stepper, const StationaryProfile& p);

struct RunOptions {
  double t_final = 10;
  double cadence = 0.1;
  bool record_history = false;
  bool check_sup_bound = true;  // skipped automatically when (nd) fails
  const ReferenceFields* ref = nullptr;
  std::ostream* csv = nullptr;
  std::vector<double> snapshot_times;
  std::function<void(double, const SimState&)> on_snapshot;
};

struct RunStats {
  double max_flux_residual = 0;
  double max_flux_rel = 0;
  double max_dissipation_gap = 0;
  double max_dissipation_rel = 0;
  double max_mass_residual = 0;
  double max_cfl = 0;
  double min_bound_slack = std::numeric_limits<double>::infinity();  // rhs - lhs
  long steps = 0;
  std::vector<HistorySample> history;
  std::vector<std::pair<double, double>> sup_dist_series;  // (t, max field sup-dist)
};

/// Advances the state to t_final with the CFL step, landing exactly on the
/// sample cadence, snapshot times and t_final.
RunStats run_simulation(Stepper& stepper, SimState& state, const RunOptions& opt);

// Subcommand drivers; each returns a process exit status.
int cmd_validate(const Config& cfg, std::ostream& out);
int cmd_simulate(const Config& cfg, const std::string& out_dir, bool dump_matrix,
                 std::ostream& log);
int cmd_stationary(const Config& cfg, const std::string& out_dir, const std::string& special,
                   bool dump_matrix, std::ostream& log);
int cmd_perturb(const Config& cfg, const std::string& out_dir, std::ostream& log);
int cmd_oracle_check(const Config& cfg, const std::string& out_dir, double tol,
                     std::ostream& log);

}  // namespace netchemo

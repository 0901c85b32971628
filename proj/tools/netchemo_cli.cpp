#include "netchemo/experiments.hpp"

#include <CLI11.hpp>
#include <iostream>

using namespace netchemo;

int main(int argc, char** argv) {
  CLI::App app{"Chemotaxis flow simulator and stationary solver on metric graphs"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out";
  double tol_flag = -1, tmax_flag = -1, oracle_tol = 1e-6;
  int cells_flag = -1;
  bool dump_matrix = false;
  std::string special;

  auto add_common = [&](CLI::App* sub, bool with_out = true) {
    sub->add_option("--config", config_path, "configuration file (JSON)")->required();
    if (with_out) sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--tol", tol_flag, "tolerance override");
    sub->add_option("--tmax", tmax_flag, "final time override");
    sub->add_option("--cells", cells_flag, "grid cells override for every arc");
    sub->add_flag("--dump-matrix", dump_matrix, "dump the elliptic matrix in triplet form");
  };

  CLI::App* v = app.add_subcommand("validate", "parse and validate a network config");
  add_common(v, false);
  CLI::App* s = app.add_subcommand("simulate", "run the time integrator");
  add_common(s);
  CLI::App* st = app.add_subcommand("stationary", "solve for a stationary profile");
  add_common(st);
  st->add_option("--special", special, "special solution: zero | constant");
  CLI::App* pe = app.add_subcommand("perturb", "perturbation-decay experiment");
  add_common(pe);
  CLI::App* oc = app.add_subcommand("oracle-check", "fixed point vs shooting oracle");
  add_common(oc);
  oc->add_option("--check-tol", oracle_tol, "agreement tolerance");

  CLI11_PARSE(app, argc, argv);

  Config cfg;
  try {
    cfg = load_config(config_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  Overrides o;
  if (tol_flag > 0) o.tol = tol_flag;
  if (tmax_flag > 0) o.t_final = tmax_flag;
  if (cells_flag > 0) o.cells = cells_flag;
  apply_overrides(cfg, o);

  if (app.got_subcommand(v)) return cmd_validate(cfg, std::cout);
  if (app.got_subcommand(s)) return cmd_simulate(cfg, out_dir, dump_matrix, std::cout);
  if (app.got_subcommand(st)) return cmd_stationary(cfg, out_dir, special, dump_matrix, std::cout);
  if (app.got_subcommand(pe)) return cmd_perturb(cfg, out_dir, std::cout);
  if (app.got_subcommand(oc)) return cmd_oracle_check(cfg, out_dir, oracle_tol, std::cout);
  return 1;
}

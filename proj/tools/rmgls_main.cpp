#include "rmgls/driver.hpp"
#include "rmgls/errors.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  using namespace rmgls;
  CLI::App app{"Riemannian multigrid line search on fixed-rank matrices"};
  app.require_subcommand(1);
  app.set_version_flag("--version", version_stamp());

  std::optional<std::string> config_path;
  std::vector<std::string> overrides;
  std::string out = "out";
  std::optional<std::uint64_t> seed;
  std::string preset;
  std::optional<std::string> step_log;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config file");
    sub->add_option("--set", overrides, "override a config value, e.g. cycle.nu1=3")->allow_extra_args(false);
    sub->add_option("--out", out, "output directory")->capture_default_str();
    sub->add_option("--seed", seed, "RNG seed");
  };
  CLI::App* solve = app.add_subcommand("solve", "fixed-rank solve");
  CLI::App* adapt = app.add_subcommand("adapt", "rank-adaptive solve");
  CLI::App* demo = app.add_subcommand("ls-demo", "steepest descent on a dense quadratic");
  CLI::App* check = app.add_subcommand("oracle-check", "dense-vs-factored property suite");
  CLI::App* sweep = app.add_subcommand("sweep", "run a preset grid of solves");
  for (CLI::App* s : {solve, adapt, demo, check, sweep}) common(s);
  for (CLI::App* s : {solve, adapt}) s->add_option("--step-log", step_log, "CSV of accepted line-search steps");
  sweep->add_option("--preset", preset, "fig-convergence | table-residuals")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (seed) overrides.push_back("seed=" + std::to_string(*seed));
    const RunConfig cfg = load_config(config_path, overrides);
    if (solve->parsed() || adapt->parsed()) {
      cfg.validate_solve();
      const RunResult r = run_solve(cfg, out, adapt->parsed(), step_log);
      const ConvergenceRow& last = r.record.rows.back();
      std::cout << "iterations " << last.iter << (r.record.converged ? " (converged)" : " (not converged)")
                << "  R-grad " << last.rgrad << "  r " << last.r;
      if (last.err_W) std::cout << "  err-W " << *last.err_W;
      std::cout << "\nwrote " << out << "/convergence.csv and summary.json\n";
      return 0;
    }
    if (demo->parsed()) {
      const LsDemoResult r = run_ls_demo_command(cfg, out);
      std::cout << "final relative gradient " << r.final_grad_rel << ", evaluations " << r.rows.back().fevals << "\n";
      return 0;
    }
    if (check->parsed()) return run_oracle_check(cfg, std::cout);
    const int failed = run_sweep(sweep_preset(preset, cfg), out, cfg.workers, std::cout);
    return failed == 0 ? 0 : 1;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

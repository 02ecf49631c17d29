#include "rmgls/driver.hpp"

#include "rmgls/errors.hpp"
#include "rmgls/verify.hpp"

#include <omp.h>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#ifndef RMGLS_GIT_STAMP
#define RMGLS_GIT_STAMP "unknown"
#endif

namespace rmgls {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json event_counts(const std::vector<CycleEvent>& events) {
  std::map<std::string, int> counts;
  for (const CycleEvent& e : events) ++counts["level " + std::to_string(e.level) + ": " + e.what];
  return json(counts);
}

std::string step_log_csv(const std::vector<AcceptedStep>& steps) {
  std::ostringstream os;
  os << "level,correction,phi0,dphi0,t,phi,dphi,status\n";
  for (const AcceptedStep& s : steps)
    os << s.level << ',' << (s.correction ? 1 : 0) << ',' << num(s.phi0) << ',' << num(s.dphi0) << ','
       << num(s.point.t) << ',' << num(s.point.phi) << ',' << num(s.point.dphi) << ','
       << (s.status == SearchStatus::Converged ? "converged" : "budget") << '\n';
  return os.str();
}

}  // namespace

void write_atomically(const fs::path& path, const std::string& contents) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << contents;
    out.flush();
    if (!out) throw Error("write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw Error("cannot move " + tmp.string() + " into place: " + ec.message());
  }
}

std::string version_stamp() { return std::string("rmgls 0.1.0 (") + RMGLS_GIT_STAMP + ")"; }

std::string convergence_csv(const ConvergenceRecord& rec) {
  std::ostringstream os;
  os << kConvergenceHeader << '\n';
  for (const ConvergenceRow& r : rec.rows) {
    os << r.iter << ',' << num(r.f) << ',' << num(r.err_F) << ',' << num(r.rgrad) << ','
       << (r.err_W ? num(*r.err_W) : "") << ',' << num(r.r) << ',' << num(r.r_bw) << ',' << r.fevals << ','
       << num(r.seconds) << ',' << r.rank << ',' << num(r.rgrad_abs) << '\n';
  }
  return os.str();
}

std::unique_ptr<VariationalProblem> make_problem(const RunConfig& cfg) {
  const GridLevel g = GridLevel::at(cfg.fine_level);
  if (cfg.problem == ProblemKind::Lyapunov) return std::make_unique<LyapunovProblem>(g);
  return std::make_unique<NonlinearProblem>(g, cfg.lambda);
}

std::optional<DenseSolution> make_oracle(const RunConfig& cfg, const VariationalProblem& p) {
  if (!cfg.oracle || cfg.fine_level > kOracleMaxLevel) return std::nullopt;
  const Matrix Gamma = to_dense(*p.gamma());
  if (cfg.problem == ProblemKind::Lyapunov) return solve_lyapunov_dense(p.grid(), Gamma);
  return solve_nonlinear_dense(p.grid(), Gamma, cfg.lambda);
}

RunResult run_solve(const RunConfig& cfg, const fs::path& out, bool adaptive, const std::optional<fs::path>& step_log) {
  cfg.validate_solve();
  const auto p = make_problem(cfg);
  const LevelStack stack(*p, cfg.cycle.coarsest_level);
  const std::optional<DenseSolution> oracle = make_oracle(cfg, *p);

  std::vector<AcceptedStep> steps;
  SolveOptions so;
  if (oracle) so.oracle = &*oracle;
  if (step_log) so.step_log = &steps;

  std::vector<RankSegment> schedule;
  std::pair<FactoredMatrix, ConvergenceRecord> res = [&] {
    if (adaptive) {
      schedule = cfg.schedule.empty() ? default_rank_schedule() : cfg.schedule;
      return rank_adaptive_solve(stack, cfg.cycle, schedule, so);
    }
    return solve(stack, initial_guess(p->n(), cfg.rank, cfg.cycle.seed), cfg.cycle, so);
  }();
  ConvergenceRecord& rec = res.second;

  std::optional<double> f_ref, best_err;
  if (oracle) {
    f_ref = p->value(from_dense(oracle->W_star));
    best_err = best_rank_k_error(oracle->W_star, res.first.rank());
    rec.fill_err_F(f_ref);
  }

  const ConvergenceRow& last = rec.rows.back();
  json sched = json::array();
  for (const RankSegment& s : schedule) sched.push_back({{"rank", s.rank}, {"iterations", s.iterations}});
  json summary = {
      {"version", version_stamp()},
      {"command", adaptive ? "adapt" : "solve"},
      {"config", to_json(cfg)},
      {"metrics",
       {{"iterations", last.iter},
        {"converged", rec.converged},
        {"rank", last.rank},
        {"f", last.f},
        {"err_F", last.err_F},
        {"err_F_reference", f_ref ? "oracle" : "final iterate"},
        {"R_grad", last.rgrad},
        {"R_grad_abs", last.rgrad_abs},
        {"err_W", opt(last.err_W)},
        {"r", last.r},
        {"r_BW", last.r_bw},
        {"fevals", last.fevals},
        {"seconds", last.seconds},
        {"best_rank_k_error", opt(best_err)},
        {"oracle_method", oracle ? json(oracle->method) : json(nullptr)},
        {"oracle_residual", oracle ? json(oracle->residual) : json(nullptr)}}},
      {"schedule", sched},
      {"events", event_counts(rec.events)},
  };

  // Everything is computed before the first file is touched.
  const std::string csv = convergence_csv(rec);
  const std::string js = summary.dump(2) + "\n";
  write_atomically(out / "convergence.csv", csv);
  write_atomically(out / "summary.json", js);
  if (step_log) write_atomically(*step_log, step_log_csv(steps));
  return {std::move(rec), std::move(summary)};
}

LsDemoResult run_ls_demo_command(const RunConfig& cfg, const fs::path& out) {
  const LsDemoResult r = run_ls_demo(cfg.ls_demo);
  std::ostringstream os;
  os << "iter,f_err,grad_rel,err,fevals,step\n";
  for (const LsDemoRow& row : r.rows)
    os << row.iter << ',' << num(row.f_err) << ',' << num(row.grad_rel) << ',' << num(row.err) << ',' << row.fevals
       << ',' << num(row.step) << '\n';
  const json summary = {
      {"version", version_stamp()},
      {"command", "ls-demo"},
      {"config", to_json(cfg)},
      {"metrics",
       {{"iterations", r.rows.back().iter},
        {"final_grad_rel", r.final_grad_rel},
        {"min_grad_rel", r.min_grad_rel},
        {"fevals", r.rows.back().fevals},
        {"fevals_to_grad_1e-7", r.evals_to_1e7 ? json(*r.evals_to_1e7) : json(nullptr)}}},
  };
  const std::string csv = os.str();
  const std::string js = summary.dump(2) + "\n";
  write_atomically(out / "ls_demo.csv", csv);
  write_atomically(out / "summary.json", js);
  return r;
}

int run_oracle_check(const RunConfig& cfg, std::ostream& os) {
  if (cfg.fine_level > kOracleMaxLevel)
    throw ConfigError("oracle-check refuses level " + std::to_string(cfg.fine_level) + ": the dense oracle stops at " +
                      std::to_string(kOracleMaxLevel));
  PropertySuiteOptions so;
  so.level = std::clamp(cfg.fine_level, 3, 5);
  so.seed = cfg.cycle.seed;
  so.corrupt_factors = cfg.corrupt_factors;
  std::vector<PropertyResult> results = run_property_suite(so);

  // Oracle self-check on the configured level.
  const auto p = make_problem(cfg);
  const Matrix Gamma = to_dense(*p->gamma());
  if (cfg.problem == ProblemKind::Lyapunov) {
    const DenseSolution s = solve_lyapunov_dense(p->grid(), Gamma);
    const double tol = 1e-10 * Gamma.norm();
    results.push_back({"oracle/lyapunov residual", s.residual, tol, s.residual <= tol, s.method});
  } else {
    try {
      const DenseSolution s = solve_nonlinear_dense(p->grid(), Gamma, cfg.lambda);
      results.push_back({"oracle/nonlinear residual", s.residual, 1e-9, s.residual <= 1e-9, s.method});
    } catch (const NewtonError& e) {
      results.push_back({"oracle/nonlinear residual", e.best().residual, 1e-9, false, e.what()});
    }
  }

  int failed = 0;
  for (const PropertyResult& r : results) {
    char line[256];
    std::snprintf(line, sizeof line, "%s  %-40s %10.3e  (tol %.0e)", r.pass ? "PASS" : "FAIL", r.name.c_str(), r.value,
                  r.tol);
    os << line;
    if (!r.detail.empty() && !r.pass) os << "  " << r.detail;
    os << '\n';
    failed += r.pass ? 0 : 1;
  }
  os << (failed == 0 ? "all properties passed" : std::to_string(failed) + " properties failed") << '\n';
  return failed == 0 ? 0 : 1;
}

std::vector<SweepCell> sweep_preset(const std::string& preset, const RunConfig& base) {
  std::vector<SweepCell> cells;
  auto cell = [&](int level, int rank) {
    RunConfig c = base;
    c.fine_level = level;
    c.rank = rank;
    cells.push_back({"l" + std::to_string(level) + "_k" + std::to_string(rank), c});
  };
  if (preset == "fig-convergence") {
    RunConfig c = base;
    c.problem = ProblemKind::Lyapunov;
    c.cycle.nu1 = c.cycle.nu2 = 5;
    c.cycle.coarsest_level = 5;
    c.fine_level = 8;
    c.rank = 5;
    cells.push_back({"l8_k5", c});
  } else if (preset == "table-residuals") {
    for (int k : {5, 10})
      for (int l = 7; l <= 10; ++l) cell(l, k);
  } else {
    throw ConfigError("unknown preset '" + preset + "' (fig-convergence, table-residuals)");
  }
  for (const SweepCell& c : cells) c.cfg.validate_solve();
  return cells;
}

int run_sweep(const std::vector<SweepCell>& cells, const fs::path& out, int workers, std::ostream& log) {
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::vector<std::optional<json>> summaries(cells.size());
  int failed = 0;
  auto work = [&] {
    if (workers > 1) omp_set_num_threads(1);
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      try {
        RunResult r = run_solve(cells[i].cfg, out / cells[i].name, false);
        std::lock_guard lock(mu);
        summaries[i] = r.summary;
        log << cells[i].name << ": " << r.record.rows.back().iter << " cycles, r = " << r.record.rows.back().r << '\n';
      } catch (const std::exception& e) {
        std::lock_guard lock(mu);
        ++failed;
        log << cells[i].name << ": failed: " << e.what() << '\n';
      }
    }
  };
  std::vector<std::thread> pool;
  const int nthreads = std::max(1, std::min<int>(workers, static_cast<int>(cells.size())));
  const int omp_threads = omp_get_max_threads();
  for (int t = 1; t < nthreads; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  omp_set_num_threads(omp_threads);

  std::ostringstream os;
  os << "cell,problem,fine_level,rank,iterations,converged,R_grad,R_grad_abs,r,r_BW,err_W\n";
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (!summaries[i]) continue;
    const json& m = (*summaries[i])["metrics"];
    os << cells[i].name << ',' << (cells[i].cfg.problem == ProblemKind::Lyapunov ? "lyapunov" : "nonlinear") << ','
       << cells[i].cfg.fine_level << ',' << cells[i].cfg.rank << ',' << m["iterations"].get<int>() << ','
       << (m["converged"].get<bool>() ? 1 : 0) << ',' << num(m["R_grad"].get<double>()) << ','
       << num(m["R_grad_abs"].get<double>()) << ',' << num(m["r"].get<double>()) << ',' << num(m["r_BW"].get<double>())
       << ',' << (m["err_W"].is_null() ? "" : num(m["err_W"].get<double>())) << '\n';
  }
  write_atomically(out / "sweep.csv", os.str());
  return failed;
}

}  // namespace rmgls

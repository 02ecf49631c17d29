#pragma once

#include "rmgls/config.hpp"

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace rmgls {

// Writes via a temporary file in the same directory and a rename.
void write_atomically(const std::filesystem::path& path, const std::string& contents);

std::string version_stamp();

// Stable column order of convergence.csv.
inline constexpr const char* kConvergenceHeader = "iter,f,err_F,R_grad,err_W,r,r_BW,fevals,seconds,rank,R_grad_abs";
std::string convergence_csv(const ConvergenceRecord& rec);

std::unique_ptr<VariationalProblem> make_problem(const RunConfig& cfg);
// Dense reference on the fine level, or empty when disabled or above the cap.
std::optional<DenseSolution> make_oracle(const RunConfig& cfg, const VariationalProblem& p);

struct RunResult {
  ConvergenceRecord record;
  nlohmann::json summary;
};

// solve (adaptive = false) or adapt; writes convergence.csv and summary.json into out.
RunResult run_solve(const RunConfig& cfg, const std::filesystem::path& out, bool adaptive,
                    const std::optional<std::filesystem::path>& step_log = std::nullopt);

// Writes ls_demo.csv and summary.json.
LsDemoResult run_ls_demo_command(const RunConfig& cfg, const std::filesystem::path& out);

// Prints one line per property; returns the process exit code.
int run_oracle_check(const RunConfig& cfg, std::ostream& os);

struct SweepCell {
  std::string name;
  RunConfig cfg;
};
std::vector<SweepCell> sweep_preset(const std::string& preset, const RunConfig& base);
// Cells run on cfg.workers threads; each cell writes into out/<name>. Returns the failed cell count.
int run_sweep(const std::vector<SweepCell>& cells, const std::filesystem::path& out, int workers, std::ostream& log);

}  // namespace rmgls

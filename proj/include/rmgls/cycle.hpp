#pragma once

#include "rmgls/linesearch.hpp"
#include "rmgls/objective.hpp"
#include "rmgls/oracle.hpp"
#include "rmgls/problems.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace rmgls {

/// psi(x) = f(x) - <R_anchor^{-1}(x), kappa>. Its Euclidean gradient is
/// grad f(x) - kappa (kappa as a rank-2k matrix), so the Riemannian gradient is
/// P_{T_x}(grad f(x) - kappa); at the anchor this is grad f - kappa.
class CoarseModel final : public Objective {
 public:
  CoarseModel(const Objective& base, FactoredMatrix anchor, TangentVector kappa);

  Index n() const override { return base_.n(); }
  double value(const FactoredMatrix& X) const override;
  RawFactored egrad(const FactoredMatrix& X) const override;
  ValueAndGradient evaluate(const FactoredMatrix& X) const override;
  // The kappa term is linear, so the Hessian is the base Hessian.
  std::optional<RawFactored> ehess(const FactoredMatrix& X, const RawFactored& Z) const override {
    return base_.ehess(X, Z);
  }

  const Objective& base() const { return base_; }
  const FactoredMatrix& anchor() const { return anchor_; }
  const TangentVector& kappa() const { return kappa_; }

 private:
  const Objective& base_;
  FactoredMatrix anchor_;
  TangentVector kappa_;
  RawFactored kappa_raw_;  // -kappa
};

struct CycleConfig {
  int nu1 = 5;
  int nu2 = 5;
  int coarsest_level = 5;
  double grad_tol = 1e-12;      // on R-grad, relative to iteration 0
  int max_cycles = 100;
  double coarse_solver_tol = 1e-11;  // relative to the initial model gradient
  int coarse_solver_max_iters = 200;
  bool coarse_trust_region = true;
  double smoother_step_factor = 0.5;
  double stationary_tol = 1e-14;  // absolute gradient norm treated as zero
  int cycle_index = 1;            // 1 = V-cycle, 2 = W-cycle
  TangentRestriction restriction = TangentRestriction::Transpose;
  TangentTransferMode tangent_transfer = TangentTransferMode::Projected;
  // Smoother searches. A tight curvature condition matters here: with the
  // loose classical 0.9 the halved steps leave a slow component behind.
  LineSearchConfig line_search{.delta = 0.1, .sigma = 0.1};
  // Curvature parameter of the coarse-correction search.
  double correction_sigma = 0.1;
  // Start the correction search at the secant estimate from one probe step.
  bool correction_secant_start = true;
  // Accepted steps may raise f by at most this times |f| (rounding allowance).
  double increase_slack = 1e-13;
  std::uint64_t seed = 42;
  bool check_invariants = true;

  void validate() const;
};

/// Base problems for the levels coarsest..finest.
class LevelStack {
 public:
  LevelStack(const VariationalProblem& finest, int coarsest_level);

  const VariationalProblem& at(int level) const;
  int finest() const { return finest_; }
  int coarsest() const { return coarsest_; }

 private:
  int finest_, coarsest_;
  std::vector<std::unique_ptr<VariationalProblem>> problems_;
};

struct AcceptedStep {
  int level;
  bool correction;
  double phi0;
  double dphi0;
  LinePoint point;
  SearchStatus status;
};

struct CycleEvent {
  int level;
  std::string what;
};

/// Mutable state of one solve: step memory, counters and logs.
struct CycleContext {
  CycleContext(const LevelStack& stack, const CycleConfig& cfg);

  const LevelStack& stack;
  const CycleConfig& cfg;
  std::vector<double> smoother_step;    // per level, 0 = unset
  std::vector<double> correction_step;  // per level
  long long fevals = 0;
  long long coarse_iterations = 0;
  long long cg_steps = 0;
  bool log_steps = false;
  std::vector<AcceptedStep> steps;
  std::vector<CycleEvent> events;
};

FactoredMatrix smooth(const Objective& f, FactoredMatrix X, int steps, CycleContext& ctx, int level);

struct CoarseSetup {
  std::unique_ptr<CoarseModel> model;
  FactoredMatrix x_H;
  double fine_value;
  TangentVector fine_grad;
};
CoarseSetup build_coarse_model(const Objective& fine, const Objective& coarse, const FactoredMatrix& x_bar_h,
                               const TransferPair& pair, long long* fevals = nullptr);

struct CoarseSolveStats {
  int iterations = 0;
  long long cg_steps = 0;
  long long fevals = 0;
  double grad0 = 0.0;
  double grad = 0.0;
};
// Riemannian Hessian of m at x applied to v; egrad is the Euclidean gradient at x.
TangentVector hessian_vector(const Objective& m, const FactoredMatrix& x, const RawFactored& egrad,
                             const TangentVector& v, long long* fevals = nullptr);

FactoredMatrix coarse_solve(const Objective& m, FactoredMatrix x0, const CycleConfig& cfg,
                            CoarseSolveStats* stats = nullptr);

FactoredMatrix rmgls_iteration(CycleContext& ctx, int level, const Objective& f, const FactoredMatrix& X);

struct ConvergenceRow {
  int iter = 0;
  int rank = 0;
  double f = 0.0;
  double err_F = 0.0;
  double rgrad = 0.0;      // relative to iteration 0
  double rgrad_abs = 0.0;
  std::optional<double> err_W;
  double r = 0.0;          // h^2 |AW + WA - Gamma|_F
  double r_bw = 0.0;
  long long fevals = 0;
  double seconds = 0.0;
};

struct ConvergenceRecord {
  std::vector<ConvergenceRow> rows;
  std::vector<CycleEvent> events;
  bool converged = false;
  // err-F against the given reference, or against the last row when empty.
  void fill_err_F(std::optional<double> f_ref = std::nullopt);
};

struct SolveOptions {
  const DenseSolution* oracle = nullptr;
  std::function<void(const ConvergenceRow&)> on_row;
  bool log_steps = false;
  std::vector<AcceptedStep>* step_log = nullptr;
};

FactoredMatrix initial_guess(Index n, Index k, std::uint64_t seed);

std::pair<FactoredMatrix, ConvergenceRecord> solve(const LevelStack& stack, const FactoredMatrix& X0,
                                                   const CycleConfig& cfg, const SolveOptions& opts = {});

struct RankSegment {
  int rank;
  int iterations;
};

// Pads X with orthonormal random directions at singular value 1e-8 S[0].
FactoredMatrix pad_rank(const FactoredMatrix& X, Index new_rank, std::mt19937_64& rng);

std::pair<FactoredMatrix, ConvergenceRecord> rank_adaptive_solve(const LevelStack& stack, const CycleConfig& cfg,
                                                                 const std::vector<RankSegment>& schedule,
                                                                 const SolveOptions& opts = {});

}  // namespace rmgls

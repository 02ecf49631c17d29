#include "rmgls/cycle.hpp"

#include "rmgls/errors.hpp"
#include "rmgls/riemannian_line.hpp"

#include <chrono>
#include <cmath>

namespace rmgls {

/* ---- CoarseModel ---- */

CoarseModel::CoarseModel(const Objective& base, FactoredMatrix anchor, TangentVector kappa)
    : base_(base), anchor_(std::move(anchor)), kappa_(std::move(kappa)), kappa_raw_(kappa_.raw().scaled(-1.0)) {
  require_same_base(kappa_, anchor_);
}

double CoarseModel::value(const FactoredMatrix& X) const {
  return base_.value(X) - tangent_inner(inverse_retract(anchor_, X), kappa_);
}

RawFactored CoarseModel::egrad(const FactoredMatrix& X) const { return concat_blkdiag({base_.egrad(X), kappa_raw_}); }

ValueAndGradient CoarseModel::evaluate(const FactoredMatrix& X) const {
  ValueAndGradient vg = base_.evaluate(X);
  vg.value -= tangent_inner(inverse_retract(anchor_, X), kappa_);
  vg.egrad = concat_blkdiag({vg.egrad, kappa_raw_});
  return vg;
}

/* ---- configuration and level stack ---- */

void CycleConfig::validate() const {
  if (coarsest_level < 2) throw ConfigError("coarsest level must be at least 2");
  if (nu1 < 0 || nu2 < 0 || nu1 + nu2 == 0) throw ConfigError("need nu1, nu2 >= 0, not both zero");
  if (max_cycles < 0) throw ConfigError("max_cycles must be nonnegative");
  if (!(grad_tol >= 0.0)) throw ConfigError("grad_tol must be nonnegative");
  if (!(coarse_solver_tol >= 0.0) || coarse_solver_max_iters < 0) throw ConfigError("bad coarse solver settings");
  if (!(smoother_step_factor > 0.0 && smoother_step_factor <= 1.0))
    throw ConfigError("smoother step factor must lie in (0, 1]");
  if (cycle_index < 1 || cycle_index > 2) throw ConfigError("cycle_index must be 1 (V) or 2 (W)");
  if (!(increase_slack >= 0.0)) throw ConfigError("increase_slack must be nonnegative");
  line_search.validate();
  LineSearchConfig ls = line_search;
  ls.sigma = correction_sigma;
  ls.validate();
}

LevelStack::LevelStack(const VariationalProblem& finest, int coarsest_level)
    : finest_(finest.grid().level), coarsest_(coarsest_level) {
  if (coarsest_ > finest_) throw ConfigError("coarsest level above finest level");
  if (coarsest_ < 2) throw ConfigError("coarsest level must be at least 2");
  for (int l = coarsest_; l <= finest_; ++l) problems_.push_back(finest.on_level(l));
}

const VariationalProblem& LevelStack::at(int level) const {
  if (level < coarsest_ || level > finest_) throw DimensionError("level outside the stack");
  return *problems_[static_cast<std::size_t>(level - coarsest_)];
}

CycleContext::CycleContext(const LevelStack& s, const CycleConfig& c)
    : stack(s),
      cfg(c),
      smoother_step(static_cast<std::size_t>(s.finest() + 1), 0.0),
      correction_step(static_cast<std::size_t>(s.finest() + 1), 0.0) {}

/* ---- smoother ---- */

namespace {

void check_point(const CycleContext& ctx, const FactoredMatrix& X) {
  if (ctx.cfg.check_invariants) X.validate(1e-11);
}

void log_step(CycleContext& ctx, int level, bool correction, const LineObjective& obj, const LineSearchResult& res) {
  if (ctx.log_steps) ctx.steps.push_back({level, correction, obj.phi0, obj.dphi0, res.point, res.status});
}

// One probe at t1, then the zero of the secant model of phi' through 0 and t1.
// Falls back to t1 when the curvature along the line is not positive.
double secant_start(const RiemannianLine& line, double t1) {
  const LineObjective& obj = line.objective();
  LinePoint p;
  try {
    p = line.eval(t1);
  } catch (const RetractionDomainError&) {
    return t1;
  }
  if (!std::isfinite(p.phi) || !std::isfinite(p.dphi) || !(p.dphi > obj.dphi0)) return t1;
  const double ts = t1 * obj.dphi0 / (obj.dphi0 - p.dphi);
  return std::isfinite(ts) && ts > 0.0 ? ts : t1;
}

}  // namespace

FactoredMatrix smooth(const Objective& f, FactoredMatrix X, int steps, CycleContext& ctx, int level) {
  const CycleConfig& cfg = ctx.cfg;
  if (steps <= 0) return X;
  ValueAndGradient vg = f.evaluate(X);
  ++ctx.fevals;
  for (int s = 0; s < steps; ++s) {
    const TangentVector g = project(X, vg.egrad);
    const double gn = tangent_norm(g);
    if (gn <= cfg.stationary_tol) break;
    TangentVector xi = g.scaled(-1.0);
    RiemannianLine line(f, X, xi, vg.value, -gn * gn);
    double& memory = ctx.smoother_step[static_cast<std::size_t>(level)];
    const double t0 = memory > 0.0 ? memory : 1.0 / gn;
    const LineSearchResult res = hz_search(line.objective(), t0, cfg.line_search);
    ctx.fevals += res.evals;
    if (!(res.t > 0.0)) {
      ctx.events.push_back({level, "smoother line search made no progress"});
      break;
    }
    memory = res.t;
    // Steps may not raise f beyond rounding; the approximate Wolfe window is
    // far wider than that when the line is not convex. The shortened step is
    // tried first and its gradient is reused by the next step.
    const double cap = vg.value + cfg.increase_slack * std::abs(vg.value);
    bool moved = false;
    if (cfg.smoother_step_factor < 1.0) {
      try {
        FactoredMatrix Y = retract(X, xi.scaled(cfg.smoother_step_factor * res.t));
        ValueAndGradient vy = f.evaluate(Y);
        ++ctx.fevals;
        if (std::isfinite(vy.value) && vy.value <= cap) {
          X = std::move(Y);
          vg = std::move(vy);
          moved = true;
        }
      } catch (const RetractionDomainError&) {
      }
    }
    if (!moved && res.point.phi <= cap) {
      X = line.point_at(res.t);
      if (s + 1 < steps) {
        vg = f.evaluate(X);
        ++ctx.fevals;
      }
      moved = true;
    }
    if (!moved) {
      ctx.events.push_back({level, "smoother step would increase f, stopped"});
      break;
    }
    log_step(ctx, level, false, line.objective(), res);
    check_point(ctx, X);
  }
  return X;
}

/* ---- coarse correction ---- */

CoarseSetup build_coarse_model(const Objective& fine, const Objective& coarse, const FactoredMatrix& x_bar_h,
                               const TransferPair& pair, long long* fevals) {
  FactoredMatrix x_H = restrict_point(x_bar_h, pair);
  ValueAndGradient vg = fine.evaluate(x_bar_h);
  TangentVector g_h = project(x_bar_h, vg.egrad);
  TangentVector g_H = coarse.rgrad(x_H);
  if (fevals) *fevals += 2;
  TangentVector kappa = tangent_axpy(1.0, g_H, -1.0, restrict_tangent(g_h, x_H, x_bar_h, pair));
  auto model = std::make_unique<CoarseModel>(coarse, x_H, std::move(kappa));
  return {std::move(model), std::move(x_H), vg.value, std::move(g_h)};
}

FactoredMatrix rmgls_iteration(CycleContext& ctx, int level, const Objective& f, const FactoredMatrix& X) {
  const CycleConfig& cfg = ctx.cfg;
  FactoredMatrix x = smooth(f, X, cfg.nu1, ctx, level);

  if (level > ctx.stack.coarsest()) {
    const TransferPair pair = TransferPair::between(level, cfg.restriction, cfg.tangent_transfer);
    CoarseSetup setup = build_coarse_model(f, ctx.stack.at(level - 1), x, pair, &ctx.fevals);
    check_point(ctx, setup.x_H);
    FactoredMatrix x_H1 = setup.x_H;
    if (level - 1 == ctx.stack.coarsest()) {
      CoarseSolveStats st;
      x_H1 = coarse_solve(*setup.model, x_H1, cfg, &st);
      ctx.fevals += st.fevals;
      ctx.coarse_iterations += st.iterations;
      ctx.cg_steps += st.cg_steps;
    } else {
      for (int c = 0; c < cfg.cycle_index; ++c) x_H1 = rmgls_iteration(ctx, level - 1, *setup.model, x_H1);
    }
    const TangentVector eta_H = inverse_retract(setup.x_H, x_H1);
    const TangentVector eta_h = interpolate_tangent(eta_H, x, setup.x_H, pair);
    const double slope = tangent_inner(setup.fine_grad, eta_h);
    if (slope < 0.0) {
      RiemannianLine line(f, x, eta_h, setup.fine_value, slope);
      double& memory = ctx.correction_step[static_cast<std::size_t>(level)];
      LineSearchConfig ls = cfg.line_search;
      ls.sigma = cfg.correction_sigma;
      double t0 = memory > 0.0 ? memory : 1.0;
      if (cfg.correction_secant_start) t0 = secant_start(line, t0);
      const LineSearchResult res = hz_search(line.objective(), t0, ls);
      ctx.fevals += line.evaluations();
      // The approximate Wolfe window admits small increases; a correction may not.
      const double slack = cfg.increase_slack * std::abs(setup.fine_value);
      if (res.t > 0.0 && res.point.phi <= setup.fine_value + slack) {
        log_step(ctx, level, true, line.objective(), res);
        memory = res.t;
        x = line.point_at(res.t);
        check_point(ctx, x);
      } else {
        ctx.events.push_back({level, "coarse correction rejected by line search"});
      }
    } else {
      ctx.events.push_back({level, "coarse correction is not a descent direction, skipped"});
    }
  }

  return smooth(f, std::move(x), cfg.nu2, ctx, level);
}

/* ---- outer drivers ---- */

void ConvergenceRecord::fill_err_F(std::optional<double> f_ref) {
  if (rows.empty()) return;
  const double ref = f_ref ? *f_ref : rows.back().f;
  for (auto& r : rows) r.err_F = std::abs(r.f - ref) / std::abs(ref);
}

FactoredMatrix initial_guess(Index n, Index k, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return random_point(n, k, rng);
}

namespace {

using Clock = std::chrono::steady_clock;

struct RunState {
  int iter = 0;
  double g0 = 0.0;
  long long fevals = 0;
  double seconds = 0.0;
};

ConvergenceRow make_row(const VariationalProblem& p, const FactoredMatrix& X, const RunState& rs, double seconds,
                        const SolveOptions& opts) {
  ConvergenceRow row;
  row.iter = rs.iter;
  row.rank = static_cast<int>(X.rank());
  const ValueAndGradient vg = p.evaluate(X);
  row.f = vg.value;
  row.rgrad_abs = tangent_norm(project(X, vg.egrad));
  row.rgrad = rs.g0 > 0.0 ? row.rgrad_abs / rs.g0 : 0.0;
  row.r = p.scaled_residual(X);
  row.r_bw = p.residual_bw(X);
  if (opts.oracle) row.err_W = err_W(X, *opts.oracle);
  row.fevals = rs.fevals;
  row.seconds = seconds;
  return row;
}

// Runs up to max_cycles cycles starting from X; appends rows after the first.
FactoredMatrix run_cycles(const LevelStack& stack, FactoredMatrix X, const CycleConfig& cfg, int max_cycles,
                          const SolveOptions& opts, RunState& rs, ConvergenceRecord& rec, bool emit_first) {
  const VariationalProblem& p = stack.at(stack.finest());
  CycleContext ctx(stack, cfg);
  ctx.log_steps = opts.log_steps || opts.step_log != nullptr;
  const auto start = Clock::now();
  auto elapsed = [&] { return rs.seconds + std::chrono::duration<double>(Clock::now() - start).count(); };

  if (rs.g0 == 0.0) rs.g0 = tangent_norm(p.rgrad(X));
  if (emit_first) {
    rec.rows.push_back(make_row(p, X, rs, elapsed(), opts));
    if (opts.on_row) opts.on_row(rec.rows.back());
  }
  rec.converged = rec.rows.empty() ? false : rec.rows.back().rgrad <= cfg.grad_tol;
  for (int c = 0; c < max_cycles && !rec.converged; ++c) {
    const long long before = ctx.fevals;
    X = rmgls_iteration(ctx, stack.finest(), p, X);
    check_point(ctx, X);
    rs.fevals += ctx.fevals - before;
    ++rs.iter;
    rec.rows.push_back(make_row(p, X, rs, elapsed(), opts));
    if (opts.on_row) opts.on_row(rec.rows.back());
    rec.converged = rec.rows.back().rgrad <= cfg.grad_tol;
  }
  rs.seconds = elapsed();
  rec.events.insert(rec.events.end(), ctx.events.begin(), ctx.events.end());
  if (opts.step_log) opts.step_log->insert(opts.step_log->end(), ctx.steps.begin(), ctx.steps.end());
  return X;
}

}  // namespace

std::pair<FactoredMatrix, ConvergenceRecord> solve(const LevelStack& stack, const FactoredMatrix& X0,
                                                   const CycleConfig& cfg, const SolveOptions& opts) {
  cfg.validate();
  if (X0.n() != stack.at(stack.finest()).n()) throw DimensionError("initial guess does not match finest grid");
  ConvergenceRecord rec;
  RunState rs;
  FactoredMatrix X = run_cycles(stack, X0, cfg, cfg.max_cycles, opts, rs, rec, true);
  rec.fill_err_F();
  return {std::move(X), std::move(rec)};
}

FactoredMatrix pad_rank(const FactoredMatrix& X, Index new_rank, std::mt19937_64& rng) {
  const Index k = X.rank(), n = X.n();
  if (new_rank <= k) return X;
  if (new_rank > n) throw DimensionError("rank exceeds side length");
  const Index extra = new_rank - k;
  auto complement = [&](const Matrix& U) {
    Matrix G = random_orthonormal(n, extra, rng);
    G -= U * (U.transpose() * G);
    Eigen::HouseholderQR<Matrix> qr(G);
    return Matrix(qr.householderQ() * Matrix::Identity(n, extra));
  };
  RawFactored r{Matrix(n, new_rank), Matrix::Zero(new_rank, new_rank), Matrix(n, new_rank)};
  r.A << X.U(), complement(X.U());
  r.B << X.V(), complement(X.V());
  r.D.diagonal().head(k) = X.S();
  r.D.diagonal().tail(extra).setConstant(1e-8 * X.S()(0));
  return recompress(r, new_rank, 0.0);
}

std::pair<FactoredMatrix, ConvergenceRecord> rank_adaptive_solve(const LevelStack& stack, const CycleConfig& cfg,
                                                                 const std::vector<RankSegment>& schedule,
                                                                 const SolveOptions& opts) {
  cfg.validate();
  if (schedule.empty()) throw ConfigError("empty rank schedule");
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    if (schedule[i].rank < 1 || schedule[i].iterations < 0) throw ConfigError("bad rank schedule segment");
    if (i > 0 && schedule[i].rank < schedule[i - 1].rank) throw ConfigError("rank schedule must be nondecreasing");
  }
  const Index n = stack.at(stack.finest()).n();
  std::mt19937_64 rng(cfg.seed ^ 0x5eedULL);
  FactoredMatrix X = initial_guess(n, schedule.front().rank, cfg.seed);
  ConvergenceRecord rec;
  RunState rs;
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    if (i > 0) X = pad_rank(X, schedule[i].rank, rng);
    // Stopping on the tolerance applies only to the last segment.
    const bool last = i + 1 == schedule.size();
    CycleConfig seg = cfg;
    if (!last) seg.grad_tol = 0.0;
    ConvergenceRecord part;
    X = run_cycles(stack, X, seg, schedule[i].iterations, opts, rs, part, i == 0);
    rec.rows.insert(rec.rows.end(), part.rows.begin(), part.rows.end());
    rec.events.insert(rec.events.end(), part.events.begin(), part.events.end());
    rec.converged = part.converged;
  }
  rec.fill_err_F();
  return {std::move(X), std::move(rec)};
}

}  // namespace rmgls

#include "rmgls/cycle.hpp"
#include "rmgls/errors.hpp"
#include "rmgls/riemannian_line.hpp"

#include <cmath>
#include <limits>

namespace rmgls {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

struct State {
  FactoredMatrix x;
  double f;
  RawFactored egrad;
  TangentVector g;
  double gn;
};

State state_at(const Objective& m, FactoredMatrix x, long long& fevals) {
  ValueAndGradient vg = m.evaluate(x);
  ++fevals;
  TangentVector g = project(x, vg.egrad);
  const double gn = tangent_norm(g);
  return {std::move(x), vg.value, std::move(vg.egrad), std::move(g), gn};
}

}  // namespace

// Riemannian Hessian: the projected Euclidean Hessian plus the curvature term
// of the manifold in closed form. Without a closed-form Euclidean Hessian the
// gradient is differenced along the straight line x + tau v; differencing along
// the retraction instead moves the smallest singular values by more than their
// size once they drop below tau.
TangentVector hessian_vector(const Objective& m, const FactoredMatrix& x, const RawFactored& egrad,
                             const TangentVector& v, long long* fevals) {
  require_same_base(v, x);
  const double vn = tangent_norm(v);
  if (vn == 0.0) return TangentVector::zero(x);
  std::optional<TangentVector> dg;
  if (std::optional<RawFactored> eh = m.ehess(x, v.raw())) {
    dg = project(x, *eh);
  } else {
    const double tau = std::sqrt(kEps) * (1.0 + x.norm()) / vn;
    const FactoredMatrix y = recompress(concat_blkdiag({x.raw(), v.raw().scaled(tau)}), std::nullopt, 0.0);
    if (fevals) ++*fevals;
    dg = project(x, concat_blkdiag({m.egrad(y).scaled(1.0 / tau), egrad.scaled(-1.0 / tau)}));
  }

  const RawFactored& Z = egrad;
  const Vector sinv = x.S().cwiseInverse();
  Matrix Up = Z.A * (Z.D * (Z.B.transpose() * v.Vp()));
  Up -= x.U() * (x.U().transpose() * Up);
  Matrix Vp = Z.B * (Z.D.transpose() * (Z.A.transpose() * v.Up()));
  Vp -= x.V() * (x.V().transpose() * Vp);
  const TangentVector curv(x, Matrix::Zero(x.rank(), x.rank()), Up * sinv.asDiagonal(), Vp * sinv.asDiagonal());
  return tangent_axpy(1.0, *dg, 1.0, curv);
}

namespace {

TangentVector hessian_at(const Objective& m, const State& s, const TangentVector& v, long long& fevals) {
  return hessian_vector(m, s.x, s.egrad, v, &fevals);
}

// Positive root of |eta + tau delta| = radius.
double to_boundary(const TangentVector& eta, const TangentVector& delta, double radius) {
  const double a = tangent_inner(delta, delta);
  const double b = 2.0 * tangent_inner(eta, delta);
  const double c = tangent_inner(eta, eta) - radius * radius;
  return (-b + std::sqrt(std::max(0.0, b * b - 4.0 * a * c))) / (2.0 * a);
}

struct TcgResult {
  TangentVector eta;
  TangentVector Heta;
  bool hit_boundary;
};

TcgResult truncated_cg(const Objective& m, const State& s, double radius, int max_inner, CoarseSolveStats& st) {
  TangentVector eta = TangentVector::zero(s.x);
  TangentVector Heta = eta;
  TangentVector r = s.g;
  TangentVector delta = r.scaled(-1.0);
  double rr = tangent_inner(r, r);
  const double r0 = std::sqrt(rr);
  const double stop = r0 * std::min(r0, 0.1);
  for (int j = 0; j < max_inner; ++j) {
    ++st.cg_steps;
    const TangentVector Hd = hessian_at(m, s, delta, st.fevals);
    const double kappa = tangent_inner(delta, Hd);
    const double alpha = rr / kappa;
    const TangentVector trial = tangent_axpy(1.0, eta, alpha, delta);
    if (!(kappa > 0.0) || tangent_norm(trial) >= radius) {
      const double tau = to_boundary(eta, delta, radius);
      return {tangent_axpy(1.0, eta, tau, delta), tangent_axpy(1.0, Heta, tau, Hd), true};
    }
    eta = trial;
    Heta = tangent_axpy(1.0, Heta, alpha, Hd);
    r = tangent_axpy(1.0, r, alpha, Hd);
    const double rr_new = tangent_inner(r, r);
    if (std::sqrt(rr_new) <= stop) break;
    delta = tangent_axpy(-1.0, r, rr_new / rr, delta);
    rr = rr_new;
  }
  return {eta, Heta, false};
}

FactoredMatrix descent_solve(const Objective& m, State s, double tol, const CycleConfig& cfg,
                             CoarseSolveStats& st) {
  double t_prev = 0.0;
  for (; st.iterations < cfg.coarse_solver_max_iters && s.gn > tol; ++st.iterations) {
    TangentVector xi = s.g.scaled(-1.0);
    RiemannianLine line(m, s.x, xi, s.f, -s.gn * s.gn);
    const LineSearchResult res = hz_search(line.objective(), t_prev > 0 ? t_prev : 1.0 / s.gn, cfg.line_search);
    st.fevals += res.evals;
    if (!(res.t > 0.0)) break;
    t_prev = res.t;
    s = state_at(m, line.point_at(res.t), st.fevals);
  }
  st.grad = s.gn;
  return s.x;
}

}  // namespace

FactoredMatrix coarse_solve(const Objective& m, FactoredMatrix x0, const CycleConfig& cfg, CoarseSolveStats* stats) {
  CoarseSolveStats st;
  State s = state_at(m, std::move(x0), st.fevals);
  st.grad0 = st.grad = s.gn;
  const double noise = 1e-15 * frob_norm(m.egrad(s.x));
  const double tol = std::max({cfg.coarse_solver_tol * s.gn, noise, cfg.stationary_tol});
  if (s.gn <= tol) {
    if (stats) *stats = st;
    return s.x;
  }
  if (!cfg.coarse_trust_region) {
    FactoredMatrix x = descent_solve(m, std::move(s), tol, cfg, st);
    if (stats) *stats = st;
    return x;
  }

  const double radius_max = s.x.norm();
  double radius = radius_max / 8.0;
  const int dim = static_cast<int>(s.x.rank() * (2 * s.x.n() - s.x.rank()));
  const int max_inner = std::min(dim, 500);
  int stalls = 0;
  // Near the noise floor the gradient stops halving; give up after a few tries.
  double best = s.gn;
  int no_gain = 0;
  int flat = 0;
  for (; st.iterations < cfg.coarse_solver_max_iters && s.gn > tol; ++st.iterations) {
    const TcgResult step = truncated_cg(m, s, radius, max_inner, st);
    const double model_decrease = -(tangent_inner(s.g, step.eta) + 0.5 * tangent_inner(step.eta, step.Heta));
    const double reg = std::max(1.0, std::abs(s.f)) * kEps * 1e3;
    std::optional<State> next;
    double rho = -1.0;
    // Rounding (or a differenced Hessian) can predict an increase; count that as a failed step.
    if (model_decrease > 0.0) {
      try {
        next = state_at(m, retract(s.x, step.eta), st.fevals);
        rho = (s.f - next->f + reg) / (model_decrease + reg);
      } catch (const RetractionDomainError&) {
        next.reset();
      }
    }
    if (!(rho >= 0.25)) {
      radius *= 0.25;
    } else if (rho > 0.75 && step.hit_boundary) {
      radius = std::min(2.0 * radius, radius_max);
    }
    if (next && rho > 0.1 && next->f <= s.f + reg) {
      // Accepted only thanks to the rounding allowance: at the noise floor.
      flat = next->f >= s.f ? flat + 1 : 0;
      s = std::move(*next);
      stalls = 0;
      if (flat >= 3) break;
      if (s.gn < 0.5 * best) {
        best = s.gn;
        no_gain = 0;
      } else if (s.gn <= 1e-3 * st.grad0 && ++no_gain >= 3) {
        break;
      }
    } else if (++stalls > 40 || radius < 1e-15 * radius_max) {
      break;
    }
  }
  st.grad = s.gn;
  if (stats) *stats = st;
  return s.x;
}

}  // namespace rmgls

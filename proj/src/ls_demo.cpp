#include "rmgls/ls_demo.hpp"

#include "rmgls/errors.hpp"

#include <algorithm>

namespace rmgls {

LsDemoResult run_ls_demo(const LsDemoOptions& opts) {
  if (opts.n < 2 || !(opts.cond >= 1.0)) throw ConfigError("ls-demo needs n >= 2 and cond >= 1");
  opts.line_search.validate();
  const Index n = opts.n;
  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> g(0.0, 1.0);
  auto gaussian = [&](Index r, Index c) {
    Matrix M(r, c);
    for (Index j = 0; j < c; ++j)
      for (Index i = 0; i < r; ++i) M(i, j) = g(rng);
    return M;
  };

  const Matrix Q = random_orthonormal(n, n, rng);
  const Vector lam = Vector::LinSpaced(n, 1.0, opts.cond);
  Matrix A = Q * lam.asDiagonal() * Q.transpose();
  A = 0.5 * (A + A.transpose()).eval();
  const Matrix Xs = gaussian(n, n);
  const Matrix B = A * Xs;
  Matrix X = gaussian(n, n);

  auto f = [&](const Matrix& Y) { return 0.5 * (Y.array() * (A * Y).array()).sum() - (Y.array() * B.array()).sum(); };
  auto record = [&](int it, const Matrix& Y, const Matrix& G, double g0, long long ev, double t) {
    const Matrix E = Y - Xs;
    return LsDemoRow{it, 0.5 * (E.array() * (A * E).array()).sum(), G.norm() / g0, E.norm() / Xs.norm(), ev, t};
  };

  LsDemoResult out;
  Matrix G = A * X - B;
  const double g0 = G.norm();
  double fx = f(X);
  long long evals = 1;
  double t_prev = 0.0;
  int stuck = 0;
  out.rows.push_back(record(0, X, G, g0, evals, 0.0));
  for (int it = 1; it <= opts.max_iters && stuck < 5; ++it) {
    const Matrix D = -G;
    LineObjective obj;
    obj.phi0 = fx;
    obj.dphi0 = -(G.squaredNorm());
    Matrix G_last;
    obj.eval = [&](double t) {
      const Matrix Y = X + t * D;
      G_last = A * Y - B;
      return LinePoint{t, f(Y), (G_last.array() * D.array()).sum()};
    };
    if (!(obj.dphi0 < 0.0)) break;
    const LineSearchResult res = hz_search(obj, t_prev > 0.0 ? t_prev : 1.0 / g0, opts.line_search);
    evals += res.evals;
    if (res.t > 0.0) {
      X += res.t * D;
      G = A * X - B;
      fx = f(X);
      t_prev = res.t;
      stuck = 0;
    } else {
      ++stuck;
    }
    out.rows.push_back(record(it, X, G, g0, evals, res.t));
  }
  out.final_grad_rel = out.rows.back().grad_rel;
  out.min_grad_rel = out.rows.front().grad_rel;
  for (const auto& r : out.rows) {
    out.min_grad_rel = std::min(out.min_grad_rel, r.grad_rel);
    if (!out.evals_to_1e7 && r.grad_rel <= 1e-7) out.evals_to_1e7 = r.fevals;
  }
  return out;
}

}  // namespace rmgls

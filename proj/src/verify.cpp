#include "rmgls/verify.hpp"

#include "rmgls/cycle.hpp"
#include "rmgls/errors.hpp"
#include "rmgls/riemannian_line.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <sstream>

namespace rmgls {

namespace {

class Suite {
 public:
  explicit Suite(std::vector<PropertyResult>& out) : out_(out) {}

  void check(const std::string& name, double value, double tol, const std::string& detail = {}) {
    out_.push_back({name, value, tol, std::isfinite(value) && value <= tol, detail});
  }
  // Runs body; an exception counts as a failure of that property.
  void guarded(const std::string& name, double tol, const std::function<double()>& body) {
    try {
      check(name, body(), tol);
    } catch (const std::exception& e) {
      out_.push_back({name, std::nan(""), tol, false, e.what()});
    }
  }

 private:
  std::vector<PropertyResult>& out_;
};

double rel(const Matrix& a, const Matrix& b) { return (a - b).norm() / std::max(b.norm(), 1e-300); }

Matrix gaussian(Index r, Index c, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix M(r, c);
  for (Index j = 0; j < c; ++j)
    for (Index i = 0; i < r; ++i) M(i, j) = g(rng);
  return M;
}

RawFactored random_raw(Index n, Index r, std::mt19937_64& rng) {
  return {gaussian(n, r, rng), gaussian(r, r, rng), gaussian(n, r, rng)};
}

FactoredMatrix graded_point(Index n, Index k, std::mt19937_64& rng) {
  Vector S(k);
  for (Index i = 0; i < k; ++i) S(i) = std::pow(0.5, static_cast<double>(i));
  return FactoredMatrix(random_orthonormal(n, k, rng), S, random_orthonormal(n, k, rng));
}

TangentVector random_tangent(const FactoredMatrix& X, std::mt19937_64& rng, double norm = 1.0) {
  const Index n = X.n(), k = X.rank();
  TangentVector t(X, gaussian(k, k, rng), gaussian(n, k, rng), gaussian(n, k, rng));
  return t.scaled(norm / tangent_norm(t));
}

Matrix dense_projection(const FactoredMatrix& X, const Matrix& Z) {
  const Matrix PU = X.U() * X.U().transpose();
  const Matrix PV = X.V() * X.V().transpose();
  return PU * Z + Z * PV - PU * Z * PV;
}

Matrix dense_stencil(const GridLevel& g) {
  Matrix A = Matrix::Zero(g.n, g.n);
  for (Index i = 0; i < g.n; ++i) {
    A(i, i) = 2.0;
    if (i > 0) A(i, i - 1) = -1.0;
    if (i + 1 < g.n) A(i, i + 1) = -1.0;
  }
  return A / (g.h * g.h);
}

Matrix dense_gamma(const GridLevel& g) {
  Matrix G(g.n, g.n);
  for (Index i = 0; i < g.n; ++i) {
    for (Index j = 0; j < g.n; ++j) {
      const double x = static_cast<double>(i + 1) * g.h, y = static_cast<double>(j + 1) * g.h;
      double s = 0.0;
      for (int m = 1; m <= 5; ++m)
        s += std::pow(2.0, m - 1) * std::sin(m * std::numbers::pi * x) * std::sin(m * std::numbers::pi * y);
      G(i, j) = std::exp(x - 2.0 * y) * s;
    }
  }
  return G;
}

// Energy by explicit summation over forward differences with zero boundary values.
double dense_energy(const GridLevel& g, const Matrix& W, const Matrix& Gamma, double lambda) {
  const Index n = g.n;
  auto at = [&](Index i, Index j) { return (i < 0 || j < 0 || i >= n || j >= n) ? 0.0 : W(i, j); };
  double grad2 = 0.0;
  for (Index i = -1; i < n; ++i)
    for (Index j = 0; j < n; ++j) grad2 += std::pow((at(i + 1, j) - at(i, j)) / g.h, 2);
  for (Index i = 0; i < n; ++i)
    for (Index j = -1; j < n; ++j) grad2 += std::pow((at(i, j + 1) - at(i, j)) / g.h, 2);
  const double h2 = g.h * g.h;
  const double cubic = lambda * (W.squaredNorm() + (2.0 / 3.0) * W.array().cube().sum());
  return 0.5 * h2 * (grad2 + cubic) - h2 * (Gamma.array() * W.array()).sum();
}

Matrix dense_residual(const GridLevel& g, const Matrix& W, const Matrix& Gamma, double lambda) {
  const Matrix A = dense_stencil(g);
  return A * W + W * A + lambda * (W.cwiseProduct(W) + W) - Gamma;
}

Matrix dense_retract(const FactoredMatrix& X, const TangentVector& xi) {
  const Matrix K = Matrix(X.S().asDiagonal()) + xi.M();
  const Matrix left = X.U() * K + xi.Up();
  const Matrix right = K * X.V().transpose() + xi.Vp().transpose();
  return left * K.inverse() * right;
}

// Central difference of f along the retraction curve, compared with <grad, xi>.
double directional_check(const Objective& f, const FactoredMatrix& X, const TangentVector& xi, double step) {
  const double fd =
      (f.value(retract(X, xi.scaled(step))) - f.value(retract(X, xi.scaled(-step)))) / (2.0 * step);
  const TangentVector g = f.rgrad(X);
  const double an = tangent_inner(g, xi);
  return std::abs(fd - an) / std::max(std::abs(an), 1e-3 * tangent_norm(g) * tangent_norm(xi));
}

// Opposite slope, admissible left end and nesting on a recorded trace.
double bracket_violations(const LineObjective& obj, const LineSearchTrace& tr, const LineSearchConfig& cfg) {
  int bad = 0;
  const double window = obj.phi0 + cfg.epsilon * std::abs(obj.phi0);
  for (std::size_t i = 0; i < tr.brackets.size(); ++i) {
    const auto& [a, b] = tr.brackets[i];
    if (!(a.dphi < 0.0) || !(b.dphi >= 0.0) || !(a.phi <= window) || !(a.t < b.t)) ++bad;
    if (i > 0) {
      const auto& [pa, pb] = tr.brackets[i - 1];
      if (a.t < pa.t || b.t > pb.t) ++bad;
    }
  }
  return bad;
}

}  // namespace

std::vector<PropertyResult> run_property_suite(const PropertySuiteOptions& opts) {
  if (opts.level < 3 || opts.level > 5) throw ConfigError("property suite runs at levels 3..5");
  std::vector<PropertyResult> out;
  Suite s(out);
  std::mt19937_64 rng(opts.seed);
  const GridLevel grid = GridLevel::at(opts.level);
  const Index n = grid.n, k = 4;

  FactoredMatrix X = graded_point(n, k, rng);
  if (opts.corrupt_factors) {
    Matrix U = X.U() + 1e-6 * gaussian(n, k, rng);
    X = FactoredMatrix(U, X.S(), X.V());
  }
  const Matrix Xd = to_dense(X);

  s.check("manifold/orthonormal factors", X.orthonormality_defect(), 1e-12);

  // Factored arithmetic.
  s.guarded("dense/recompress", 1e-11, [&] {
    const RawFactored r = random_raw(n, 6, rng);
    return rel(to_dense(recompress(r)), to_dense(r));
  });
  s.guarded("dense/recompress idempotent", 1e-11, [&] {
    const FactoredMatrix a = recompress(random_raw(n, 5, rng));
    return rel(to_dense(recompress(a.raw())), to_dense(a));
  });
  s.guarded("dense/concat_blkdiag", 1e-11, [&] {
    const RawFactored a = random_raw(n, 2, rng), b = random_raw(n, 3, rng);
    return rel(to_dense(concat_blkdiag({a, b})), to_dense(a) + to_dense(b));
  });
  s.guarded("dense/hadamard_square", 1e-11, [&] {
    const Matrix h = to_dense(hadamard_square(X));
    return rel(h, Xd.cwiseProduct(Xd));
  });
  s.guarded("dense/frob_inner", 1e-11, [&] {
    const FactoredMatrix Y = graded_point(n, 3, rng);
    const double d = (Xd.array() * to_dense(Y).array()).sum();
    return std::abs(frob_inner(X, Y) - d) / (Xd.norm() * to_dense(Y).norm());
  });
  s.guarded("dense/frob_norm", 1e-11, [&] {
    const RawFactored r = random_raw(n, 5, rng);
    const double d = to_dense(r).norm();
    return std::abs(frob_norm(r) - d) / d;
  });

  // Geometry.
  s.guarded("dense/project", 1e-11, [&] {
    const RawFactored Z = random_raw(n, 3, rng);
    return rel(to_dense(project(X, Z)), dense_projection(X, to_dense(Z)));
  });
  s.guarded("dense/tangent inner", 1e-11, [&] {
    const TangentVector a = random_tangent(X, rng), b = random_tangent(X, rng);
    const double d = (to_dense(a).array() * to_dense(b).array()).sum();
    return std::abs(tangent_inner(a, b) - d) + std::abs(tangent_norm(a) - to_dense(a).norm());
  });
  s.guarded("dense/tangent axpy", 1e-11, [&] {
    const TangentVector a = random_tangent(X, rng), b = random_tangent(X, rng);
    return rel(to_dense(tangent_axpy(2.0, a, -0.5, b)), 2.0 * to_dense(a) - 0.5 * to_dense(b));
  });
  s.guarded("dense/retract", 1e-11, [&] {
    const TangentVector xi = random_tangent(X, rng, 0.1 * X.S()(k - 1));
    return rel(to_dense(retract(X, xi)), dense_retract(X, xi));
  });
  s.guarded("dense/inverse_retract", 1e-11, [&] {
    const FactoredMatrix Y = graded_point(n, k, rng);
    return rel(to_dense(inverse_retract(X, Y)), dense_projection(X, to_dense(Y)) - Xd);
  });
  s.guarded("retraction round trip", 1e-9, [&] {
    const TangentVector xi = random_tangent(X, rng, 0.01 * X.S()(k - 1));
    const TangentVector back = inverse_retract(X, retract(X, xi));
    return tangent_norm(tangent_axpy(1.0, back, -1.0, xi)) / tangent_norm(xi);
  });
  s.guarded("curve factors vs difference", 1e-5, [&] {
    const TangentVector eta = random_tangent(X, rng, 0.1 * X.S()(k - 1));
    const double t = 0.3, d = 1e-6;
    const CurveFactors c = retraction_curve_factors(X, eta, t);
    const Matrix fd = (to_dense(retract(X, eta.scaled(t + d))) - to_dense(retract(X, eta.scaled(t - d)))) / (2 * d);
    return rel(c.G * c.H.transpose(), fd);
  });

  // Transfers.
  const TransferPair pair = TransferPair::between(opts.level, TangentRestriction::Transpose,
                                                  TangentTransferMode::Projected);
  s.guarded("dense/restrict_point", 1e-11, [&] {
    const Matrix R = restriction_matrix(pair);
    return rel(to_dense(restrict_point(X, pair)), R * Xd * R.transpose());
  });
  const FactoredMatrix X_H = restrict_point(X, pair);
  s.guarded("dense/restrict_tangent", 1e-11, [&] {
    const TangentVector xi = random_tangent(X, rng);
    const Matrix R = tangent_restriction_matrix(pair);
    return rel(to_dense(restrict_tangent(xi, X_H, X, pair)), dense_projection(X_H, R * to_dense(xi) * R.transpose()));
  });
  s.guarded("dense/interpolate_tangent", 1e-11, [&] {
    const TangentVector xi = random_tangent(X_H, rng);
    const Matrix P = prolongation_matrix(pair);
    return rel(to_dense(interpolate_tangent(xi, X, X_H, pair)), dense_projection(X, P * to_dense(xi) * P.transpose()));
  });

  // Problems.
  const LyapunovProblem lyap(grid);
  const NonlinearProblem nonl(grid);
  const Matrix Gd = dense_gamma(grid);
  s.guarded("dense/gamma", 1e-11, [&] { return rel(to_dense(gamma_factored(grid)), Gd); });
  for (const VariationalProblem* p : {static_cast<const VariationalProblem*>(&lyap), static_cast<const VariationalProblem*>(&nonl)}) {
    const std::string tag = p->lambda() == 0.0 ? "lyapunov" : "nonlinear";
    s.guarded("dense/" + tag + " value", 1e-11, [&] {
      const double d = dense_energy(grid, Xd, Gd, p->lambda());
      return std::abs(p->value(X) - d) / std::abs(d);
    });
    s.guarded("dense/" + tag + " gradient", 1e-11, [&] {
      return rel(to_dense(p->egrad(X)), grid.h * grid.h * dense_residual(grid, Xd, Gd, p->lambda()));
    });
    s.guarded("dense/" + tag + " residual", 1e-11, [&] {
      const double d = dense_residual(grid, Xd, Gd, p->lambda()).norm();
      return std::abs(p->residual(X) - d) / d;
    });
    s.guarded("gradient difference check/" + tag, 1e-6, [&] {
      double worst = 0.0;
      for (int i = 0; i < 5; ++i) worst = std::max(worst, directional_check(*p, X, random_tangent(X, rng), 1e-4));
      return worst;
    });
  }

  // Coarse model on the next level down.
  const std::unique_ptr<VariationalProblem> coarse = lyap.on_level(opts.level - 1);
  const CoarseSetup setup = build_coarse_model(lyap, *coarse, X, pair);
  const CoarseModel& psi = *setup.model;
  s.guarded("gradient difference check/coarse model", 1e-6, [&] {
    double worst = 0.0;
    const FactoredMatrix away = retract(setup.x_H, random_tangent(setup.x_H, rng, 0.05 * setup.x_H.S()(0)));
    for (const FactoredMatrix* at : {&setup.x_H, &away})
      for (int i = 0; i < 3; ++i) worst = std::max(worst, directional_check(psi, *at, random_tangent(*at, rng), 1e-4));
    return worst;
  });
  s.guarded("coarse model at anchor", 1e-13, [&] {
    return std::abs(psi.value(setup.x_H) - coarse->value(setup.x_H)) / std::abs(coarse->value(setup.x_H));
  });
  s.guarded("first-order coherence", 1e-10, [&] {
    double worst = 0.0;
    const TangentVector g_H = psi.rgrad(setup.x_H);
    for (int i = 0; i < 3; ++i) {
      const TangentVector xi_H = random_tangent(setup.x_H, rng);
      const TangentVector xi_h = interpolate_tangent(xi_H, X, setup.x_H, pair);
      const double lhs = tangent_inner(g_H, xi_H), rhs = tangent_inner(setup.fine_grad, xi_h);
      worst = std::max(worst, std::abs(lhs - rhs) / (tangent_norm(setup.fine_grad) * tangent_norm(xi_h)));
    }
    return worst;
  });

  // Line derivative and search invariants on the Lyapunov problem.
  const TangentVector down = lyap.rgrad(X).scaled(-1.0);
  s.guarded("line derivative vs difference", 1e-5, [&] {
    RiemannianLine line(lyap, X, down);
    const double t = 0.37 / tangent_norm(down) * X.S()(k - 1), d = 1e-6 * t;
    const double fd = (line.eval(t + d).phi - line.eval(t - d).phi) / (2 * d);
    const double an = line.eval(t).dphi;
    return std::abs(fd - an) / std::abs(an);
  });
  s.guarded("line derivative at zero", 1e-10, [&] {
    RiemannianLine line(lyap, X, down);
    return std::abs(line.eval(0.0).dphi + tangent_norm(down) * tangent_norm(down)) /
           (tangent_norm(down) * tangent_norm(down));
  });
  s.guarded("line search brackets", 0.0, [&] {
    LineSearchConfig cfg;
    cfg.record_trace = true;
    double bad = 0.0;
    int brackets = 0;
    for (double scale : {1e-3, 1.0, 1e3}) {
      RiemannianLine line(lyap, X, down);
      const LineSearchResult res = hz_search(line.objective(), scale / tangent_norm(down), cfg);
      bad += bracket_violations(line.objective(), res.trace, cfg);
      if (res.status == SearchStatus::Converged && !accepted(line.objective(), res.point, cfg)) bad += 1.0;
      brackets += static_cast<int>(res.trace.brackets.size());
    }
    if (brackets == 0) throw InvariantError("no bracket was recorded");
    return bad;
  });

  // A few cycle steps keep the iterate on the manifold.
  s.guarded("manifold/after smoothing", 1e-11, [&] {
    LevelStack stack(lyap, opts.level - 1);
    CycleConfig cfg;
    cfg.coarsest_level = opts.level - 1;
    cfg.check_invariants = false;
    CycleContext ctx(stack, cfg);
    const FactoredMatrix Y = smooth(lyap, X, 3, ctx, opts.level);
    return Y.orthonormality_defect();
  });
  return out;
}

}  // namespace rmgls

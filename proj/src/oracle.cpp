#include "rmgls/oracle.hpp"

#include "rmgls/errors.hpp"
#include "rmgls/kernels.hpp"

#include <cmath>
#include <numbers>

namespace rmgls {

namespace {

void require_cap(const GridLevel& grid, const Matrix& G) {
  if (grid.n > kDenseCap) throw DenseCapError("grid too large for the dense oracle");
  if (G.rows() != grid.n || G.cols() != grid.n) throw DimensionError("right-hand side does not match grid");
}

// Symmetric orthogonal sine basis and the stencil eigenvalues.
struct SineBasis {
  Matrix Q;
  Vector lam;

  explicit SineBasis(const GridLevel& g) : Q(g.n, g.n), lam(g.n) {
    const double c = std::sqrt(2.0 * g.h);
    for (Index i = 0; i < g.n; ++i) {
      lam(i) = (2.0 - 2.0 * std::cos(static_cast<double>(i + 1) * std::numbers::pi * g.h)) / (g.h * g.h);
      for (Index j = 0; j < g.n; ++j)
        Q(i, j) = c * std::sin(static_cast<double>((i + 1) * (j + 1)) * std::numbers::pi * g.h);
    }
  }

  // Solves A X + X A + shift X = R.
  Matrix solve(const Matrix& R, double shift = 0.0) const {
    Matrix T = Q * R * Q;
    for (Index j = 0; j < T.cols(); ++j)
      for (Index i = 0; i < T.rows(); ++i) T(i, j) /= lam(i) + lam(j) + shift;
    return Q * T * Q;
  }
};

Matrix nonlinear_residual(const GridLevel& g, const Matrix& W, const Matrix& Gamma, double lambda) {
  return dense_lyapunov_apply(g, W) + lambda * (W.cwiseProduct(W) + W) - Gamma;
}

}  // namespace

Matrix dense_lyapunov_apply(const GridLevel& grid, const Matrix& X) {
  return kernels::serial::laplacian(X, grid.h) + kernels::serial::laplacian(X.transpose(), grid.h).transpose();
}

DenseSolution solve_lyapunov_dense(const GridLevel& grid, const Matrix& Gamma) {
  require_cap(grid, Gamma);
  const SineBasis basis(grid);
  DenseSolution s;
  s.W_star = basis.solve(Gamma);
  s.residual = (dense_lyapunov_apply(grid, s.W_star) - Gamma).norm();
  s.method = "sine-eigenbasis";
  return s;
}

DenseSolution solve_nonlinear_dense(const GridLevel& grid, const Matrix& Gamma, double lambda) {
  require_cap(grid, Gamma);
  const SineBasis basis(grid);
  const Index n = grid.n;
  constexpr double kTol = 1e-9;
  constexpr int kMaxNewton = 50;

  DenseSolution s;
  s.W_star = basis.solve(Gamma, lambda);
  Matrix F = nonlinear_residual(grid, s.W_star, Gamma, lambda);
  double r = F.norm();
  const bool direct = n * n <= 1200;
  s.method = direct ? "newton-lu" : "newton-pcg";

  for (int it = 0; it < kMaxNewton && r > kTol; ++it) {
    // J[E] = A E + E A + lambda (2W + 1) o E
    const Matrix diag = lambda * (2.0 * s.W_star.array() + 1.0).matrix();
    Matrix E;
    if (direct) {
      const Index N = n * n;
      Matrix J(N, N);
      for (Index c = 0; c < N; ++c) {
        Matrix e = Matrix::Zero(n, n);
        e(c % n, c / n) = 1.0;
        const Matrix je = dense_lyapunov_apply(grid, e) + diag.cwiseProduct(e);
        J.col(c) = Eigen::Map<const Vector>(je.data(), N);
      }
      const Vector rhs = -Eigen::Map<const Vector>(F.data(), N);
      const Vector x = J.partialPivLu().solve(rhs);
      E = Eigen::Map<const Matrix>(x.data(), n, n);
    } else {
      // CG preconditioned by the shifted Lyapunov operator with the mean diagonal.
      const double shift = diag.mean();
      auto J = [&](const Matrix& X) { return Matrix(dense_lyapunov_apply(grid, X) + diag.cwiseProduct(X)); };
      E = Matrix::Zero(n, n);
      Matrix R = -F;
      Matrix Z = basis.solve(R, shift);
      Matrix P = Z;
      double rz = (R.array() * Z.array()).sum();
      const double stop = 1e-3 * kTol;
      for (int k = 0; k < 500 && R.norm() > stop; ++k) {
        const Matrix JP = J(P);
        const double a = rz / (P.array() * JP.array()).sum();
        E += a * P;
        R -= a * JP;
        Z = basis.solve(R, shift);
        const double rz_new = (R.array() * Z.array()).sum();
        P = Z + (rz_new / rz) * P;
        rz = rz_new;
      }
    }
    double step = 1.0;
    bool improved = false;
    for (int halvings = 0; halvings <= 30; ++halvings, step *= 0.5) {
      const Matrix W_try = s.W_star + step * E;
      const Matrix F_try = nonlinear_residual(grid, W_try, Gamma, lambda);
      const double r_try = F_try.norm();
      if (r_try < r) {
        s.W_star = W_try;
        F = F_try;
        r = r_try;
        improved = true;
        break;
      }
    }
    if (!improved) break;
  }
  s.residual = r;
  if (r > kTol) throw NewtonError("Newton did not reach the residual tolerance", s);
  return s;
}

double best_rank_k_error(const Matrix& W_star, Index k) {
  if (W_star.rows() > kDenseCap) throw DenseCapError("matrix too large for the dense oracle");
  Eigen::BDCSVD<Matrix> svd(W_star);
  const Vector& s = svd.singularValues();
  if (k >= s.size()) return 0.0;
  return s.tail(s.size() - k).norm() / s.norm();
}

std::optional<double> err_W(const FactoredMatrix& W, const DenseSolution& oracle) {
  if (W.n() > kDenseCap || W.n() != oracle.W_star.rows()) return std::nullopt;
  return (to_dense(W) - oracle.W_star).norm() / oracle.W_star.norm();
}

}  // namespace rmgls

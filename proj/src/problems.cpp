#include "rmgls/problems.hpp"

#include "rmgls/errors.hpp"
#include "rmgls/kernels.hpp"

#include <cmath>
#include <numbers>

namespace rmgls {

FactoredMatrix gamma_factored(const GridLevel& grid) {
  constexpr int kTerms = 5;
  const Index n = grid.n;
  Matrix A(n, kTerms), B(n, kTerms);
  Matrix D = Matrix::Zero(kTerms, kTerms);
  for (int j = 1; j <= kTerms; ++j) {
    D(j - 1, j - 1) = std::ldexp(1.0, j - 1);
    for (Index i = 0; i < n; ++i) {
      const double x = static_cast<double>(i + 1) * grid.h;
      const double s = std::sin(j * std::numbers::pi * x);
      A(i, j - 1) = std::exp(x) * s;
      B(i, j - 1) = std::exp(-2.0 * x) * s;
    }
  }
  return recompress({A, D, B});
}

/* ---- VariationalProblem ---- */

VariationalProblem::VariationalProblem(GridLevel grid, std::optional<FactoredMatrix> gamma)
    : grid_(grid), gamma_(std::move(gamma)) {
  if (gamma_ && gamma_->n() != grid_.n) throw DimensionError("source term does not match grid");
}

void VariationalProblem::check_grid(const FactoredMatrix& W) const {
  if (W.n() != grid_.n) throw DimensionError("iterate does not match problem grid");
}

std::optional<FactoredMatrix> VariationalProblem::gamma_on(int level) const {
  if (level == grid_.level) return gamma_;
  if (standard_gamma_) return gamma_factored(GridLevel::at(level));
  if (level > grid_.level) throw PreconditionError("custom source term cannot be refined");
  if (!gamma_) return std::nullopt;
  FactoredMatrix g = *gamma_;
  for (int l = grid_.level; l > level; --l) g = restrict_point(g, TransferPair::between(l));
  return g;
}

double VariationalProblem::quadratic_value(const FactoredMatrix& W) const {
  const double h2 = grid_.h * grid_.h;
  const Matrix LU = kernels::forward_diff(W.U(), grid_.h) * W.S().asDiagonal();
  const Matrix LV = kernels::forward_diff(W.V(), grid_.h) * W.S().asDiagonal();
  double v = LU.squaredNorm() + LV.squaredNorm();
  if (gamma_) v -= 2.0 * frob_inner(*gamma_, W);
  return 0.5 * h2 * v;
}

double VariationalProblem::residual(const FactoredMatrix& W) const { return frob_norm(residual_matrix(W)); }

double VariationalProblem::scaled_residual(const FactoredMatrix& W) const {
  return grid_.h * grid_.h * residual(W);
}

double VariationalProblem::laplacian_norm() const {
  const double h = grid_.h;
  return (2.0 - 2.0 * std::cos(static_cast<double>(grid_.n) * std::numbers::pi * h)) / (h * h);
}

RawFactored VariationalProblem::laplacian_hessian(const RawFactored& Z) const {
  if (Z.n() != grid_.n) throw DimensionError("direction does not match problem grid");
  return concat_blkdiag({{kernels::laplacian(Z.A, grid_.h), Z.D, Z.B}, {Z.A, Z.D, kernels::laplacian(Z.B, grid_.h)}})
      .scaled(grid_.h * grid_.h);
}

double VariationalProblem::residual_bw(const FactoredMatrix& W) const {
  const double g = gamma_ ? gamma_->norm() : 0.0;
  return residual(W) / (2.0 * laplacian_norm() * W.norm() + g);
}

namespace {

RawFactored gamma_term(const std::optional<FactoredMatrix>& gamma, Index n) {
  if (!gamma) return {Matrix::Zero(n, 1), Matrix::Zero(1, 1), Matrix::Zero(n, 1)};
  return {gamma->U(), -Matrix(gamma->S().asDiagonal()), gamma->V()};
}

}  // namespace

/* ---- LyapunovProblem ---- */

LyapunovProblem::LyapunovProblem(const GridLevel& grid) : VariationalProblem(grid, gamma_factored(grid)) {
  standard_gamma_ = true;
}

double LyapunovProblem::value(const FactoredMatrix& W) const {
  check_grid(W);
  return quadratic_value(W);
}

RawFactored LyapunovProblem::residual_matrix(const FactoredMatrix& W) const {
  check_grid(W);
  const Matrix S = W.S().asDiagonal();
  return concat_blkdiag({{kernels::laplacian(W.U(), grid_.h), S, W.V()},
                         {W.U(), S, kernels::laplacian(W.V(), grid_.h)},
                         gamma_term(gamma_, grid_.n)});
}

RawFactored LyapunovProblem::egrad(const FactoredMatrix& W) const {
  return residual_matrix(W).scaled(grid_.h * grid_.h);
}

std::optional<RawFactored> LyapunovProblem::ehess(const FactoredMatrix& W, const RawFactored& Z) const {
  check_grid(W);
  return laplacian_hessian(Z);
}

std::unique_ptr<VariationalProblem> LyapunovProblem::on_level(int level) const {
  if (standard_gamma_) return std::make_unique<LyapunovProblem>(GridLevel::at(level));
  return std::make_unique<LyapunovProblem>(GridLevel::at(level), gamma_on(level));
}

/* ---- NonlinearProblem ---- */

NonlinearProblem::NonlinearProblem(GridLevel grid, std::optional<FactoredMatrix> gamma, double lambda)
    : VariationalProblem(grid, std::move(gamma)), lambda_(lambda) {
  if (!(lambda_ >= 0.0)) throw PreconditionError("lambda must be nonnegative");
}

NonlinearProblem::NonlinearProblem(const GridLevel& grid, double lambda)
    : NonlinearProblem(grid, gamma_factored(grid), lambda) {
  standard_gamma_ = true;
}

double NonlinearProblem::cubic_value(const FactoredMatrix& W, const RawFactored& sq) const {
  const double h2 = grid_.h * grid_.h;
  return 0.5 * h2 * lambda_ * (W.S().squaredNorm() + (2.0 / 3.0) * frob_inner(W.raw(), sq));
}

RawFactored NonlinearProblem::gradient_from(const FactoredMatrix& W, const RawFactored& sq) const {
  const Matrix S = W.S().asDiagonal();
  return concat_blkdiag({{kernels::laplacian(W.U(), grid_.h) + lambda_ * W.U(), S, W.V()},
                         {W.U(), S, kernels::laplacian(W.V(), grid_.h)},
                         sq.scaled(lambda_),
                         gamma_term(gamma_, grid_.n)});
}

double NonlinearProblem::value(const FactoredMatrix& W) const {
  check_grid(W);
  double v = quadratic_value(W);
  if (lambda_ != 0.0) v += cubic_value(W, hadamard_square_raw(W));
  return v;
}

RawFactored NonlinearProblem::residual_matrix(const FactoredMatrix& W) const {
  check_grid(W);
  return gradient_from(W, hadamard_square_raw(W));
}

RawFactored NonlinearProblem::egrad(const FactoredMatrix& W) const {
  return residual_matrix(W).scaled(grid_.h * grid_.h);
}

ValueAndGradient NonlinearProblem::evaluate(const FactoredMatrix& W) const {
  check_grid(W);
  const RawFactored sq = hadamard_square_raw(W);
  double v = quadratic_value(W);
  if (lambda_ != 0.0) v += cubic_value(W, sq);
  return {v, gradient_from(W, sq).scaled(grid_.h * grid_.h)};
}

// h^2 (A Z + Z A + lambda (Z + 2 W o Z)). W o Z is kept in Khatri-Rao form:
// column pairs (i, j) of U o A and (i, l) of V o B, coupled by S_i D(j, l).
std::optional<RawFactored> NonlinearProblem::ehess(const FactoredMatrix& W, const RawFactored& Z) const {
  check_grid(W);
  RawFactored H = laplacian_hessian(Z);
  if (lambda_ == 0.0) return H;
  const Index n = W.n(), k = W.rank(), r = Z.r();
  RawFactored had{Matrix(n, k * r), Matrix::Zero(k * r, k * r), Matrix(n, k * r)};
  for (Index i = 0; i < k; ++i) {
    for (Index j = 0; j < r; ++j) {
      had.A.col(i * r + j) = W.U().col(i).cwiseProduct(Z.A.col(j));
      had.B.col(i * r + j) = W.V().col(i).cwiseProduct(Z.B.col(j));
    }
    had.D.block(i * r, i * r, r, r) = (2.0 * W.S()(i)) * Z.D;
  }
  const double h2 = grid_.h * grid_.h;
  return concat_blkdiag({H, Z.scaled(h2 * lambda_), had.scaled(h2 * lambda_)});
}

std::unique_ptr<VariationalProblem> NonlinearProblem::on_level(int level) const {
  if (standard_gamma_) return std::make_unique<NonlinearProblem>(GridLevel::at(level), lambda_);
  return std::make_unique<NonlinearProblem>(GridLevel::at(level), gamma_on(level), lambda_);
}

}  // namespace rmgls

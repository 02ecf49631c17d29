#include "rmgls/transfer.hpp"

#include "rmgls/errors.hpp"
#include "rmgls/kernels.hpp"

#include <cmath>

namespace rmgls {

GridLevel GridLevel::at(int level) {
  if (level < 1 || level > 24) throw DimensionError("grid level out of range");
  const Index n = (Index{1} << level) - 1;
  return {level, n, std::ldexp(1.0, -level)};
}

TransferPair TransferPair::between(int fine_level, TangentRestriction r, TangentTransferMode m) {
  return {GridLevel::at(fine_level), GridLevel::at(fine_level - 1), r, m};
}

namespace {

void require_rows(Index rows, Index n) {
  if (rows != n) throw DimensionError("vector length does not match grid");
}

Matrix tangent_restrict_rows(const Matrix& X, const TransferPair& pair) {
  return pair.restriction == TangentRestriction::Injection ? kernels::inject(X) : kernels::interpolate_t(X);
}

// `rows` maps factor rows from the source grid to the target grid.
template <class RowMap>
TangentVector transfer_tangent(const TangentVector& xi, const FactoredMatrix& target, const TransferPair& pair,
                               RowMap rows) {
  const Index kt = target.rank();
  if (pair.mode == TangentTransferMode::Box && kt == xi.rank()) {
    Matrix Up = rows(xi.Up());
    Matrix Vp = rows(xi.Vp());
    Matrix M = target.U().transpose() * Up + Vp.transpose() * target.V() + xi.M();
    Up.noalias() -= target.U() * (target.U().transpose() * Up);
    Vp.noalias() -= target.V() * (target.V().transpose() * Vp);
    return TangentVector(target, std::move(M), std::move(Up), std::move(Vp));
  }
  const RawFactored r = xi.raw();
  return project(target, RawFactored{rows(r.A), r.D, rows(r.B)});
}

}  // namespace

Vector restrict_1d(const Vector& v, const TransferPair& pair) {
  require_rows(v.size(), pair.fine.n);
  return kernels::inject(v);
}

Vector interpolate_1d(const Vector& v, const TransferPair& pair) {
  require_rows(v.size(), pair.coarse.n);
  return kernels::interpolate(v);
}

Matrix restriction_matrix(const TransferPair& pair) {
  return kernels::serial::inject(Matrix::Identity(pair.fine.n, pair.fine.n));
}

Matrix tangent_restriction_matrix(const TransferPair& pair) {
  return tangent_restrict_rows(Matrix::Identity(pair.fine.n, pair.fine.n), pair);
}

Matrix prolongation_matrix(const TransferPair& pair) {
  return kernels::serial::interpolate(Matrix::Identity(pair.coarse.n, pair.coarse.n));
}

FactoredMatrix restrict_point(const FactoredMatrix& X_h, const TransferPair& pair) {
  require_rows(X_h.n(), pair.fine.n);
  RawFactored r{kernels::inject(X_h.U()), Matrix(X_h.S().asDiagonal()), kernels::inject(X_h.V())};
  return recompress(r, X_h.rank(), kRecompressTol);
}

TangentVector interpolate_tangent(const TangentVector& xi_H, const FactoredMatrix& X_h, const FactoredMatrix& X_H,
                                  const TransferPair& pair) {
  require_same_base(xi_H, X_H);
  require_rows(X_H.n(), pair.coarse.n);
  require_rows(X_h.n(), pair.fine.n);
  return transfer_tangent(xi_H, X_h, pair, [](const Matrix& A) { return kernels::interpolate(A); });
}

TangentVector restrict_tangent(const TangentVector& xi_h, const FactoredMatrix& X_H, const FactoredMatrix& X_h,
                               const TransferPair& pair) {
  require_same_base(xi_h, X_h);
  require_rows(X_h.n(), pair.fine.n);
  require_rows(X_H.n(), pair.coarse.n);
  return transfer_tangent(xi_h, X_H, pair, [&pair](const Matrix& A) { return tangent_restrict_rows(A, pair); });
}

}  // namespace rmgls

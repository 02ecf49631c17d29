#include "rmgls/geometry.hpp"

#include "rmgls/errors.hpp"

#include <cmath>

namespace rmgls {

TangentVector::TangentVector(FactoredMatrix base, Matrix M, Matrix Up, Matrix Vp)
    : base_(std::move(base)), M_(std::move(M)), Up_(std::move(Up)), Vp_(std::move(Vp)) {
  const Index n = base_.n(), k = base_.rank();
  if (M_.rows() != k || M_.cols() != k || Up_.rows() != n || Up_.cols() != k || Vp_.rows() != n ||
      Vp_.cols() != k)
    throw DimensionError("tangent components do not match base point");
  const Matrix a = base_.U().transpose() * Up_;
  const Matrix b = base_.V().transpose() * Vp_;
  Up_.noalias() -= base_.U() * a;
  Vp_.noalias() -= base_.V() * b;
  M_ += a + b.transpose();
}

TangentVector::TangentVector(Unchecked, FactoredMatrix base, Matrix M, Matrix Up, Matrix Vp)
    : base_(std::move(base)), M_(std::move(M)), Up_(std::move(Up)), Vp_(std::move(Vp)) {}

TangentVector TangentVector::zero(const FactoredMatrix& base) {
  const Index n = base.n(), k = base.rank();
  return TangentVector(Unchecked{}, base, Matrix::Zero(k, k), Matrix::Zero(n, k), Matrix::Zero(n, k));
}

RawFactored TangentVector::raw() const {
  const Index n = this->n(), k = rank();
  RawFactored r{Matrix(n, 2 * k), Matrix::Identity(2 * k, 2 * k), Matrix(n, 2 * k)};
  r.A.leftCols(k) = base_.U() * M_ + Up_;
  r.A.rightCols(k) = base_.U();
  r.B.leftCols(k) = base_.V();
  r.B.rightCols(k) = Vp_;
  return r;
}

TangentVector TangentVector::scaled(double a) const { return TangentVector(Unchecked{}, base_, a * M_, a * Up_, a * Vp_); }

double TangentVector::gauge_defect() const {
  return std::max((base_.U().transpose() * Up_).norm(), (base_.V().transpose() * Vp_).norm());
}

void require_same_base(const TangentVector& a, const FactoredMatrix& base) {
  if (!a.base().same_point(base)) throw BaseMismatchError("tangent vector is based at a different point");
}

TangentVector project(const FactoredMatrix& X, const RawFactored& Z) {
  Z.check();
  if (Z.n() != X.n()) throw DimensionError("projection side lengths differ");
  const Matrix BtV = Z.B.transpose() * X.V();
  const Matrix AtU = Z.A.transpose() * X.U();
  Matrix ZV = Z.A * (Z.D * BtV);
  Matrix ZtU = Z.B * (Z.D.transpose() * AtU);
  Matrix M = X.U().transpose() * ZV;
  ZV.noalias() -= X.U() * M;
  ZtU.noalias() -= X.V() * M.transpose();
  return TangentVector(X, std::move(M), std::move(ZV), std::move(ZtU));
}

void check_retraction_domain(const Matrix& K) {
  if (!K.allFinite()) throw RetractionDomainError("non-finite retraction core");
  Eigen::JacobiSVD<Matrix> svd(K);
  const Vector& s = svd.singularValues();
  if (!(s(s.size() - 1) >= 1e-14 * s(0)) || !(s(0) > 0.0))
    throw RetractionDomainError("Sigma + M is numerically singular");
}

FactoredMatrix retract(const FactoredMatrix& X, const TangentVector& xi) {
  require_same_base(xi, X);
  const Matrix K = Matrix(X.S().asDiagonal()) + xi.M();
  check_retraction_domain(K);
  const Matrix Kinv = K.inverse();
  RawFactored r{X.U() + xi.Up() * Kinv, K, X.V() + xi.Vp() * Kinv.transpose()};
  return recompress(r, X.rank(), 0.0);
}

TangentVector inverse_retract(const FactoredMatrix& X, const FactoredMatrix& Y) {
  if (Y.n() != X.n()) throw DimensionError("inverse retraction side lengths differ");
  TangentVector t = project(X, Y.raw());
  Matrix M = t.M() - Matrix(X.S().asDiagonal());
  return TangentVector(X, std::move(M), t.Up(), t.Vp());
}

TangentVector tangent_axpy(double a, const TangentVector& xi, double b, const TangentVector& eta) {
  require_same_base(eta, xi.base());
  return TangentVector(TangentVector::Unchecked{}, xi.base(), a * xi.M() + b * eta.M(), a * xi.Up() + b * eta.Up(),
                       a * xi.Vp() + b * eta.Vp());
}

double tangent_inner(const TangentVector& xi, const TangentVector& eta) {
  require_same_base(eta, xi.base());
  return (xi.M().array() * eta.M().array()).sum() + (xi.Up().array() * eta.Up().array()).sum() +
         (xi.Vp().array() * eta.Vp().array()).sum();
}

double tangent_norm(const TangentVector& xi) {
  return std::sqrt(xi.M().squaredNorm() + xi.Up().squaredNorm() + xi.Vp().squaredNorm());
}

CurveFactors retraction_curve_factors(const FactoredMatrix& X, const TangentVector& eta, double t) {
  require_same_base(eta, X);
  const Index n = X.n(), k = X.rank();
  const Matrix& U = X.U();
  const Matrix& V = X.V();
  const Matrix& M = eta.M();
  const Matrix K = Matrix(X.S().asDiagonal()) + t * M;
  check_retraction_domain(K);
  const Matrix Kinv = K.inverse();
  const Matrix W1 = U + t * eta.Up() * Kinv;

  CurveFactors f{Matrix(n, 3 * k), Matrix(n, 3 * k)};
  f.G.leftCols(k) = -(W1 * (M * Kinv));
  f.G.middleCols(k, k) = W1;
  f.G.rightCols(k) = eta.Up() + U * M;
  f.H.leftCols(k) = V * K.transpose() + t * eta.Vp();
  f.H.middleCols(k, k) = V * M.transpose() + eta.Vp();
  f.H.rightCols(k) = V + t * eta.Vp() * Kinv.transpose();
  return f;
}

Matrix to_dense(const TangentVector& xi) { return to_dense(xi.raw()); }

}  // namespace rmgls

#pragma once

#include "rmgls/factored.hpp"

namespace rmgls {

/// Tangent vector xi = U M V^T + Up V^T + U Vp^T at a base point.
/// The constructor moves any component of Up (Vp) along U (V) into M, so
/// the gauge U^T Up = V^T Vp = 0 holds without changing the dense value.
class TangentVector {
 public:
  TangentVector(FactoredMatrix base, Matrix M, Matrix Up, Matrix Vp);
  static TangentVector zero(const FactoredMatrix& base);

  const FactoredMatrix& base() const { return base_; }
  const Matrix& M() const { return M_; }
  const Matrix& Up() const { return Up_; }
  const Matrix& Vp() const { return Vp_; }
  Index n() const { return base_.n(); }
  Index rank() const { return base_.rank(); }

  // [U M + Up, U] * I * [V, Vp]^T
  RawFactored raw() const;
  TangentVector scaled(double a) const;
  double gauge_defect() const;

 private:
  struct Unchecked {};
  TangentVector(Unchecked, FactoredMatrix base, Matrix M, Matrix Up, Matrix Vp);
  friend TangentVector tangent_axpy(double, const TangentVector&, double, const TangentVector&);

  FactoredMatrix base_;
  Matrix M_, Up_, Vp_;
};

void require_same_base(const TangentVector& a, const FactoredMatrix& base);

TangentVector project(const FactoredMatrix& X, const RawFactored& Z);
inline TangentVector riemannian_gradient(const FactoredMatrix& X, const RawFactored& egrad) {
  return project(X, egrad);
}

// Throws RetractionDomainError when sigma_min(K) < 1e-14 sigma_max(K).
void check_retraction_domain(const Matrix& K);

FactoredMatrix retract(const FactoredMatrix& X, const TangentVector& xi);
TangentVector inverse_retract(const FactoredMatrix& X, const FactoredMatrix& Y);

TangentVector tangent_axpy(double a, const TangentVector& xi, double b, const TangentVector& eta);
double tangent_inner(const TangentVector& xi, const TangentVector& eta);
double tangent_norm(const TangentVector& xi);

struct CurveFactors {
  Matrix G;  // n x 3k
  Matrix H;  // n x 3k
};
// d/dt R_X(t eta) = G H^T
CurveFactors retraction_curve_factors(const FactoredMatrix& X, const TangentVector& eta, double t);

Matrix to_dense(const TangentVector& xi);

}  // namespace rmgls

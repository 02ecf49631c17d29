#include "rmgls/riemannian_line.hpp"

#include "rmgls/errors.hpp"

namespace rmgls {

double curve_derivative(const RawFactored& egrad, const CurveFactors& gh) {
  // trace(B D^T A^T G H^T) = trace((A^T G)(H^T B) D^T)
  const Matrix AtG = egrad.A.transpose() * gh.G;
  const Matrix HtB = gh.H.transpose() * egrad.B;
  const Matrix left = egrad.D.transpose() * AtG;
  return (left.array() * HtB.transpose().array()).sum();
}

RiemannianLine::RiemannianLine(const Objective& f, FactoredMatrix X, TangentVector eta)
    : f_(f),
      X_(std::move(X)),
      eta_(std::move(eta)),
      cache_(std::make_shared<std::map<double, Cached>>()),
      evals_(std::make_shared<int>(0)) {
  require_same_base(eta_, X_);
  const ValueAndGradient vg = f_.evaluate(X_);
  ++*evals_;
  obj_.phi0 = vg.value;
  obj_.dphi0 = tangent_inner(riemannian_gradient(X_, vg.egrad), eta_);
  obj_.eval = [this](double t) { return eval(t); };
}

RiemannianLine::RiemannianLine(const Objective& f, FactoredMatrix X, TangentVector eta, double phi0, double dphi0)
    : f_(f),
      X_(std::move(X)),
      eta_(std::move(eta)),
      cache_(std::make_shared<std::map<double, Cached>>()),
      evals_(std::make_shared<int>(0)) {
  require_same_base(eta_, X_);
  obj_.phi0 = phi0;
  obj_.dphi0 = dphi0;
  obj_.eval = [this](double t) { return eval(t); };
}

LinePoint RiemannianLine::eval(double t) const {
  if (auto it = cache_->find(t); it != cache_->end()) return it->second.p;
  FactoredMatrix Y = retract(X_, eta_.scaled(t));
  const CurveFactors gh = retraction_curve_factors(X_, eta_, t);
  const ValueAndGradient vg = f_.evaluate(Y);
  ++*evals_;
  const LinePoint p{t, vg.value, curve_derivative(vg.egrad, gh)};
  cache_->insert_or_assign(t, Cached{std::move(Y), p});
  return p;
}

FactoredMatrix RiemannianLine::point_at(double t) const {
  if (t == 0.0) return X_;
  auto it = cache_->find(t);
  if (it != cache_->end()) return it->second.Y;
  return retract(X_, eta_.scaled(t));
}

LineObjective riemannian_objective(const Objective& f, const FactoredMatrix& X, const TangentVector& eta) {
  auto line = std::make_shared<RiemannianLine>(f, X, eta);
  if (!(line->objective().dphi0 < 0.0)) throw PreconditionError("direction is not a descent direction");
  LineObjective obj = line->objective();
  obj.eval = [line](double t) { return line->eval(t); };
  return obj;
}

}  // namespace rmgls

#pragma once

#include "rmgls/linesearch.hpp"
#include "rmgls/objective.hpp"

#include <map>
#include <memory>

namespace rmgls {

/// phi(t) = f(R_X(t eta)) with phi'(t) from the factored chain rule.
/// Retracted points are cached so an accepted step is not recomputed.
class RiemannianLine {
 public:
  RiemannianLine(const Objective& f, FactoredMatrix X, TangentVector eta);
  // phi0 and dphi0 already known; saves one evaluation.
  RiemannianLine(const Objective& f, FactoredMatrix X, TangentVector eta, double phi0, double dphi0);
  RiemannianLine(const RiemannianLine&) = delete;
  RiemannianLine& operator=(const RiemannianLine&) = delete;

  LinePoint eval(double t) const;
  const LineObjective& objective() const { return obj_; }
  // R_X(t eta), reusing a cached evaluation when t was evaluated.
  FactoredMatrix point_at(double t) const;
  int evaluations() const { return *evals_; }

 private:
  const Objective& f_;
  FactoredMatrix X_;
  TangentVector eta_;
  LineObjective obj_;
  struct Cached {
    FactoredMatrix Y;
    LinePoint p;
  };
  std::shared_ptr<std::map<double, Cached>> cache_;
  std::shared_ptr<int> evals_;
};

// Convenience form; throws PreconditionError unless eta is a descent direction.
LineObjective riemannian_objective(const Objective& f, const FactoredMatrix& X, const TangentVector& eta);

// trace(Z^T G H^T) for Z = A D B^T, without forming n x n products.
double curve_derivative(const RawFactored& egrad, const CurveFactors& gh);

}  // namespace rmgls

#pragma once

#include "rmgls/geometry.hpp"

#include <optional>

namespace rmgls {

struct ValueAndGradient {
  double value;
  RawFactored egrad;
};

/// Smooth function on n x n matrices with a factored Euclidean gradient.
class Objective {
 public:
  virtual ~Objective() = default;

  virtual Index n() const = 0;
  virtual double value(const FactoredMatrix& X) const = 0;
  virtual RawFactored egrad(const FactoredMatrix& X) const = 0;
  virtual ValueAndGradient evaluate(const FactoredMatrix& X) const { return {value(X), egrad(X)}; }

  // Euclidean Hessian at X applied to Z, when available in closed form.
  virtual std::optional<RawFactored> ehess(const FactoredMatrix&, const RawFactored&) const { return std::nullopt; }

  TangentVector rgrad(const FactoredMatrix& X) const { return riemannian_gradient(X, egrad(X)); }
};

}  // namespace rmgls

#pragma once

#include "rmgls/objective.hpp"
#include "rmgls/transfer.hpp"

#include <memory>
#include <optional>

namespace rmgls {

// Rank-5 source term e^{x-2y} sum_j 2^{j-1} sin(j pi x) sin(j pi y) on the interior nodes.
// Rows of the matrix follow x, columns follow y.
FactoredMatrix gamma_factored(const GridLevel& grid);

/// Discrete energy (h^2/2)(|L W|^2 + |W L^T|^2) + lambda-terms - h^2 <Gamma, W>,
/// where L is the (n+1) x n forward difference with L^T L = A.
class VariationalProblem : public Objective {
 public:
  VariationalProblem(GridLevel grid, std::optional<FactoredMatrix> gamma);

  const GridLevel& grid() const { return grid_; }
  // Empty means Gamma = 0.
  const std::optional<FactoredMatrix>& gamma() const { return gamma_; }
  Index n() const override { return grid_.n; }
  virtual double lambda() const { return 0.0; }

  // Same problem on another level. The standard source term is sampled there;
  // a custom Gamma is injected (coarser levels only).
  virtual std::unique_ptr<VariationalProblem> on_level(int level) const = 0;

  // AW + WA (+ lambda (W o W + W)) - Gamma, unscaled.
  virtual RawFactored residual_matrix(const FactoredMatrix& W) const = 0;
  double residual(const FactoredMatrix& W) const;
  // h^2 * residual(W), the norm of the Euclidean gradient.
  double scaled_residual(const FactoredMatrix& W) const;
  // residual / (2 |A|_2 |W|_F + |Gamma|_F)
  double residual_bw(const FactoredMatrix& W) const;
  double laplacian_norm() const;
  // h^2 (A Z + Z A), the Hessian of the quadratic part.
  RawFactored laplacian_hessian(const RawFactored& Z) const;

 protected:
  void check_grid(const FactoredMatrix& W) const;
  // (h^2/2)(|L U S|^2 + |L V S|^2 - 2 <Gamma, W>)
  double quadratic_value(const FactoredMatrix& W) const;

  std::optional<FactoredMatrix> gamma_on(int level) const;

  GridLevel grid_;
  std::optional<FactoredMatrix> gamma_;
  bool standard_gamma_ = false;
};

class LyapunovProblem final : public VariationalProblem {
 public:
  using VariationalProblem::VariationalProblem;
  explicit LyapunovProblem(const GridLevel& grid);

  double value(const FactoredMatrix& W) const override;
  RawFactored egrad(const FactoredMatrix& W) const override;
  std::optional<RawFactored> ehess(const FactoredMatrix& W, const RawFactored& Z) const override;
  std::unique_ptr<VariationalProblem> on_level(int level) const override;
  RawFactored residual_matrix(const FactoredMatrix& W) const override;
};

class NonlinearProblem final : public VariationalProblem {
 public:
  NonlinearProblem(GridLevel grid, std::optional<FactoredMatrix> gamma, double lambda = 10.0);
  explicit NonlinearProblem(const GridLevel& grid, double lambda = 10.0);

  double lambda() const override { return lambda_; }
  double value(const FactoredMatrix& W) const override;
  RawFactored egrad(const FactoredMatrix& W) const override;
  ValueAndGradient evaluate(const FactoredMatrix& W) const override;
  std::optional<RawFactored> ehess(const FactoredMatrix& W, const RawFactored& Z) const override;
  std::unique_ptr<VariationalProblem> on_level(int level) const override;
  RawFactored residual_matrix(const FactoredMatrix& W) const override;

 private:
  double cubic_value(const FactoredMatrix& W, const RawFactored& sq) const;
  RawFactored gradient_from(const FactoredMatrix& W, const RawFactored& sq) const;
  double lambda_;
};

}  // namespace rmgls

#pragma once

#include "rmgls/factored.hpp"
#include "rmgls/transfer.hpp"

#include <optional>
#include <string>

namespace rmgls {

inline constexpr int kOracleMaxLevel = 9;

struct DenseSolution {
  Matrix W_star;
  double residual = 0.0;
  std::string method;
};

// A X + X A with the tridiagonal stencil, dense.
Matrix dense_lyapunov_apply(const GridLevel& grid, const Matrix& X);

DenseSolution solve_lyapunov_dense(const GridLevel& grid, const Matrix& Gamma);
// Damped Newton for A W + W A + lambda (W o W + W) = Gamma.
DenseSolution solve_nonlinear_dense(const GridLevel& grid, const Matrix& Gamma, double lambda);

double best_rank_k_error(const Matrix& W_star, Index k);
// Relative Frobenius error; empty above the dense cap.
std::optional<double> err_W(const FactoredMatrix& W, const DenseSolution& oracle);

class NewtonError : public std::runtime_error {
 public:
  NewtonError(const std::string& msg, DenseSolution best) : std::runtime_error(msg), best_(std::move(best)) {}
  const DenseSolution& best() const { return best_; }

 private:
  DenseSolution best_;
};

}  // namespace rmgls

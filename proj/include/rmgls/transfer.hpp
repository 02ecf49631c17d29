#pragma once

#include "rmgls/geometry.hpp"

namespace rmgls {

struct GridLevel {
  int level = 0;
  Index n = 0;
  double h = 0.0;

  static GridLevel at(int level);
};

// How tangent vectors (gradients) are restricted. Points are always injected.
enum class TangentRestriction {
  Injection,  // R = injection, as for points
  Transpose,  // R = P^T, the pairing needed for first-order coherence
};

// Box: transfer Up, Vp and M, then re-impose the gauge at the target point.
// Projected: project the full transferred matrix onto the target tangent space.
enum class TangentTransferMode { Box, Projected };

struct TransferPair {
  GridLevel fine;
  GridLevel coarse;
  TangentRestriction restriction = TangentRestriction::Injection;
  TangentTransferMode mode = TangentTransferMode::Box;

  static TransferPair between(int fine_level, TangentRestriction r = TangentRestriction::Injection,
                              TangentTransferMode m = TangentTransferMode::Box);
};

Vector restrict_1d(const Vector& v, const TransferPair& pair);
Vector interpolate_1d(const Vector& v, const TransferPair& pair);

Matrix restriction_matrix(const TransferPair& pair);           // N x n, injection
Matrix tangent_restriction_matrix(const TransferPair& pair);   // N x n, per wiring
Matrix prolongation_matrix(const TransferPair& pair);          // n x N

FactoredMatrix restrict_point(const FactoredMatrix& X_h, const TransferPair& pair);
TangentVector interpolate_tangent(const TangentVector& xi_H, const FactoredMatrix& X_h,
                                  const FactoredMatrix& X_H, const TransferPair& pair);
TangentVector restrict_tangent(const TangentVector& xi_h, const FactoredMatrix& X_H,
                               const FactoredMatrix& X_h, const TransferPair& pair);

}  // namespace rmgls

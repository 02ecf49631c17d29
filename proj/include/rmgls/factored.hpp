#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <initializer_list>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <vector>

namespace rmgls {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr double kRecompressTol = 1e-14;
inline constexpr Index kDenseCap = 4096;

/// Unstructured product A * D * B^T. Intermediate form, no orthogonality.
struct RawFactored {
  Matrix A;
  Matrix D;
  Matrix B;

  Index n() const { return A.rows(); }
  Index r() const { return D.rows(); }
  RawFactored scaled(double a) const { return {A, a * D, B}; }
  void check() const;
};

/// Rank-k matrix U diag(S) V^T with orthonormal U, V and S > 0, nonincreasing.
/// Copies share the same immutable storage.
class FactoredMatrix {
 public:
  FactoredMatrix(Matrix U, Vector S, Matrix V);

  const Matrix& U() const { return d_->U; }
  const Vector& S() const { return d_->S; }
  const Matrix& V() const { return d_->V; }
  Index n() const { return d_->U.rows(); }
  Index rank() const { return d_->S.size(); }

  std::uint64_t fingerprint() const { return d_->fp; }
  bool same_point(const FactoredMatrix& o) const {
    return d_ == o.d_ || (d_->fp == o.d_->fp && n() == o.n() && rank() == o.rank());
  }

  RawFactored raw() const;
  double norm() const { return d_->S.norm(); }

  double orthonormality_defect() const;
  // Throws InvariantError if any manifold invariant is violated.
  void validate(double tol = 1e-12) const;

 private:
  struct Data {
    Matrix U;
    Vector S;
    Matrix V;
    std::uint64_t fp;
  };
  std::shared_ptr<const Data> d_;
};

FactoredMatrix recompress(const RawFactored& X, std::optional<Index> target_rank = std::nullopt,
                          double tol = kRecompressTol);

RawFactored concat_blkdiag(std::span<const RawFactored> terms);
RawFactored concat_blkdiag(std::initializer_list<RawFactored> terms);

// Khatri-Rao form of X o X with the symmetric pairs merged: k(k+1)/2 columns.
RawFactored hadamard_square_raw(const FactoredMatrix& X);
FactoredMatrix hadamard_square(const FactoredMatrix& X);

double frob_inner(const FactoredMatrix& X, const FactoredMatrix& Y);
double frob_inner(const RawFactored& X, const RawFactored& Y);
// Computed from the triangular QR factors, so small differences of large terms stay accurate.
double frob_norm(const RawFactored& X);

Matrix to_dense(const FactoredMatrix& X);
Matrix to_dense(const RawFactored& X);
FactoredMatrix from_dense(const Matrix& W, std::optional<Index> target_rank = std::nullopt,
                          double tol = kRecompressTol);

Matrix random_orthonormal(Index n, Index k, std::mt19937_64& rng);
// Orthonormal Gaussian factors with unit singular values.
FactoredMatrix random_point(Index n, Index k, std::mt19937_64& rng);

}  // namespace rmgls

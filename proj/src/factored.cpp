#include "rmgls/factored.hpp"

#include "rmgls/errors.hpp"
#include "rmgls/kernels.hpp"

#include <bit>
#include <cmath>
#include <string>

namespace rmgls {

namespace {

constexpr double kAbsFloor = 1e-290;

std::uint64_t mix(std::uint64_t h, double v) {
  h ^= std::bit_cast<std::uint64_t>(v) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  return h;
}

std::uint64_t fingerprint_of(const Matrix& U, const Vector& S, const Matrix& V) {
  std::uint64_t h = static_cast<std::uint64_t>(U.rows()) * 1000003ULL + static_cast<std::uint64_t>(S.size());
  for (Index i = 0; i < S.size(); ++i) h = mix(h, S(i));
  // Weighted column sums see permutations and sign flips.
  const Vector w = Vector::LinSpaced(U.rows(), 1.0, 2.0);
  h = mix(h, (w.transpose() * U).sum());
  h = mix(h, (w.transpose() * V).sum());
  h = mix(h, U.sum());
  h = mix(h, V.sum());
  return h;
}

// Thin QR: returns Q (n x m) and R (m x r), m = min(n, r).
void thin_qr(const Matrix& A, Matrix& Q, Matrix& R) {
  const Index m = std::min(A.rows(), A.cols());
  Eigen::HouseholderQR<Matrix> qr(A);
  Q = qr.householderQ() * Matrix::Identity(A.rows(), m);
  R = qr.matrixQR().topRows(m).triangularView<Eigen::Upper>();
}

}  // namespace

void RawFactored::check() const {
  if (A.rows() != B.rows()) throw DimensionError("raw factors have different row counts");
  if (D.rows() != A.cols() || D.cols() != B.cols())
    throw DimensionError("raw core does not match factor widths");
}

FactoredMatrix::FactoredMatrix(Matrix U, Vector S, Matrix V) {
  if (U.rows() != V.rows() || U.cols() != S.size() || V.cols() != S.size())
    throw DimensionError("inconsistent factor dimensions");
  if (S.size() < 1) throw RankCollapseError("rank-0 point");
  if (S.size() > U.rows()) throw DimensionError("rank exceeds side length");
  for (Index i = 0; i < S.size(); ++i) {
    if (!(S(i) > 0.0) || !std::isfinite(S(i))) throw InvariantError("singular values must be positive and finite");
    if (i > 0 && S(i) > S(i - 1)) throw InvariantError("singular values must be nonincreasing");
  }
  const auto fp = fingerprint_of(U, S, V);
  d_ = std::make_shared<const Data>(Data{std::move(U), std::move(S), std::move(V), fp});
}

RawFactored FactoredMatrix::raw() const { return {U(), Matrix(S().asDiagonal()), V()}; }

double FactoredMatrix::orthonormality_defect() const {
  const Index k = rank();
  const Matrix I = Matrix::Identity(k, k);
  return std::max((U().transpose() * U() - I).norm(), (V().transpose() * V() - I).norm());
}

void FactoredMatrix::validate(double tol) const {
  const double d = orthonormality_defect();
  if (!(d <= tol)) throw InvariantError("factor orthonormality defect " + std::to_string(d));
  if (!U().allFinite() || !V().allFinite()) throw InvariantError("non-finite factor entries");
}

FactoredMatrix recompress(const RawFactored& X, std::optional<Index> target_rank, double tol) {
  X.check();
  if (tol < 0) throw PreconditionError("negative recompression tolerance");
  if (X.r() == 0) throw RankCollapseError("empty factorization");
  Matrix Qa, Ra, Qb, Rb;
  thin_qr(X.A, Qa, Ra);
  thin_qr(X.B, Qb, Rb);
  const Matrix C = Ra * X.D * Rb.transpose();
  Eigen::JacobiSVD<Matrix> svd(C, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  if (s.size() == 0 || !(s(0) > kAbsFloor)) throw RankCollapseError("matrix is numerically zero");
  if (!std::isfinite(s(0))) throw InvariantError("non-finite values in recompression");
  Index keep = 0;
  while (keep < s.size() && s(keep) > tol * s(0) && s(keep) > kAbsFloor) ++keep;
  if (target_rank) keep = std::min(keep, *target_rank);
  if (keep < 1) throw RankCollapseError("target rank must be positive");

  Matrix U = Qa * svd.matrixU().leftCols(keep);
  Matrix V = Qb * svd.matrixV().leftCols(keep);
  for (Index j = 0; j < keep; ++j) {
    Index imax;
    U.col(j).cwiseAbs().maxCoeff(&imax);
    if (U(imax, j) < 0) {
      U.col(j) *= -1.0;
      V.col(j) *= -1.0;
    }
  }
  return FactoredMatrix(std::move(U), s.head(keep), std::move(V));
}

RawFactored concat_blkdiag(std::span<const RawFactored> terms) {
  if (terms.empty()) throw DimensionError("no terms to concatenate");
  const Index n = terms[0].n();
  Index ra = 0, rb = 0;
  for (const auto& t : terms) {
    t.check();
    if (t.n() != n) throw DimensionError("terms have different side lengths");
    ra += t.A.cols();
    rb += t.B.cols();
  }
  RawFactored out{Matrix(n, ra), Matrix::Zero(ra, rb), Matrix(n, rb)};
  Index ca = 0, cb = 0;
  for (const auto& t : terms) {
    out.A.middleCols(ca, t.A.cols()) = t.A;
    out.B.middleCols(cb, t.B.cols()) = t.B;
    out.D.block(ca, cb, t.D.rows(), t.D.cols()) = t.D;
    ca += t.A.cols();
    cb += t.B.cols();
  }
  return out;
}

RawFactored concat_blkdiag(std::initializer_list<RawFactored> terms) {
  return concat_blkdiag(std::span<const RawFactored>(terms.begin(), terms.size()));
}

RawFactored hadamard_square_raw(const FactoredMatrix& X) {
  const Index k = X.rank();
  Vector w(k * (k + 1) / 2);
  Index c = 0;
  for (Index i = 0; i < k; ++i)
    for (Index j = i; j < k; ++j) w(c++) = (i == j ? 1.0 : 2.0) * X.S()(i) * X.S()(j);
  return {kernels::khatri_rao_sym(X.U()), Matrix(w.asDiagonal()), kernels::khatri_rao_sym(X.V())};
}

FactoredMatrix hadamard_square(const FactoredMatrix& X) { return recompress(hadamard_square_raw(X)); }

double frob_inner(const FactoredMatrix& X, const FactoredMatrix& Y) {
  if (X.n() != Y.n()) throw DimensionError("frob_inner side lengths differ");
  const Matrix a = X.S().asDiagonal() * (X.U().transpose() * Y.U());
  const Matrix b = Y.S().asDiagonal() * (Y.V().transpose() * X.V());
  return (a.array() * b.transpose().array()).sum();
}

double frob_inner(const RawFactored& X, const RawFactored& Y) {
  X.check();
  Y.check();
  if (X.n() != Y.n()) throw DimensionError("frob_inner side lengths differ");
  const Matrix a = X.D.transpose() * (X.A.transpose() * Y.A);
  const Matrix b = Y.D * (Y.B.transpose() * X.B);
  return (a.array() * b.transpose().array()).sum();
}

double frob_norm(const RawFactored& X) {
  X.check();
  if (X.r() == 0) return 0.0;
  Matrix Qa, Ra, Qb, Rb;
  thin_qr(X.A, Qa, Ra);
  thin_qr(X.B, Qb, Rb);
  return (Ra * X.D * Rb.transpose()).norm();
}

Matrix to_dense(const FactoredMatrix& X) {
  if (X.n() > kDenseCap) throw DenseCapError("side length above dense cap");
  return X.U() * X.S().asDiagonal() * X.V().transpose();
}

Matrix to_dense(const RawFactored& X) {
  X.check();
  if (X.n() > kDenseCap) throw DenseCapError("side length above dense cap");
  return X.A * X.D * X.B.transpose();
}

FactoredMatrix from_dense(const Matrix& W, std::optional<Index> target_rank, double tol) {
  if (W.rows() != W.cols()) throw DimensionError("square matrix expected");
  const Index n = W.rows();
  return recompress(RawFactored{Matrix::Identity(n, n), W, Matrix::Identity(n, n)}, target_rank, tol);
}

Matrix random_orthonormal(Index n, Index k, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix G(n, k);
  for (Index j = 0; j < k; ++j)
    for (Index i = 0; i < n; ++i) G(i, j) = g(rng);
  Eigen::HouseholderQR<Matrix> qr(G);
  return qr.householderQ() * Matrix::Identity(n, k);
}

FactoredMatrix random_point(Index n, Index k, std::mt19937_64& rng) {
  Matrix U = random_orthonormal(n, k, rng);
  Matrix V = random_orthonormal(n, k, rng);
  return FactoredMatrix(std::move(U), Vector::Ones(k), std::move(V));
}

}  // namespace rmgls

#include "rmgls/kernels.hpp"

#include "rmgls/errors.hpp"

#include <omp.h>

namespace rmgls::kernels {

namespace {

Index coarse_size(Index n) {
  if (n < 1 || n % 2 == 0) throw DimensionError("fine grid size must be odd");
  return (n - 1) / 2;
}

/* ---- shared loop bodies ---- */

inline void laplacian_at(const Matrix& X, Matrix& Y, double s, Index i, Index j) {
  const Index n = X.rows();
  double v = 2.0 * X(i, j);
  if (i > 0) v -= X(i - 1, j);
  if (i + 1 < n) v -= X(i + 1, j);
  Y(i, j) = s * v;
}

inline void diff_at(const Matrix& X, Matrix& Y, double s, Index i, Index j) {
  const Index n = X.rows();
  const double hi = i < n ? X(i, j) : 0.0;
  const double lo = i > 0 ? X(i - 1, j) : 0.0;
  Y(i, j) = s * (hi - lo);
}

inline void interp_at(const Matrix& X, Matrix& Y, Index i, Index j) {
  const Index N = X.rows();
  if (i % 2 == 1) {
    Y(i, j) = X(i / 2, j);
  } else {
    const Index c = i / 2;
    const double left = c > 0 ? X(c - 1, j) : 0.0;
    const double right = c < N ? X(c, j) : 0.0;
    Y(i, j) = 0.5 * (left + right);
  }
}

inline void interp_t_at(const Matrix& X, Matrix& Y, Index c, Index j) {
  Y(c, j) = X(2 * c + 1, j) + 0.5 * (X(2 * c, j) + X(2 * c + 2, j));
}

std::vector<std::pair<Index, Index>> sym_pairs(Index k) {
  std::vector<std::pair<Index, Index>> p;
  p.reserve(k * (k + 1) / 2);
  for (Index i = 0; i < k; ++i)
    for (Index j = i; j < k; ++j) p.emplace_back(i, j);
  return p;
}

}  // namespace

/* ---- serial ---- */

namespace serial {

Matrix laplacian(const Matrix& X, double h) {
  Matrix Y(X.rows(), X.cols());
  const double s = 1.0 / (h * h);
  for (Index j = 0; j < X.cols(); ++j)
    for (Index i = 0; i < X.rows(); ++i) laplacian_at(X, Y, s, i, j);
  return Y;
}

Matrix forward_diff(const Matrix& X, double h) {
  Matrix Y(X.rows() + 1, X.cols());
  for (Index j = 0; j < X.cols(); ++j)
    for (Index i = 0; i <= X.rows(); ++i) diff_at(X, Y, 1.0 / h, i, j);
  return Y;
}

Matrix khatri_rao_sym(const Matrix& U) {
  const auto pairs = sym_pairs(U.cols());
  Matrix Y(U.rows(), static_cast<Index>(pairs.size()));
  for (Index c = 0; c < Y.cols(); ++c)
    Y.col(c) = U.col(pairs[c].first).cwiseProduct(U.col(pairs[c].second));
  return Y;
}

Matrix inject(const Matrix& X) {
  const Index N = coarse_size(X.rows());
  Matrix Y(N, X.cols());
  for (Index j = 0; j < X.cols(); ++j)
    for (Index c = 0; c < N; ++c) Y(c, j) = X(2 * c + 1, j);
  return Y;
}

Matrix interpolate(const Matrix& X) {
  const Index n = 2 * X.rows() + 1;
  Matrix Y(n, X.cols());
  for (Index j = 0; j < X.cols(); ++j)
    for (Index i = 0; i < n; ++i) interp_at(X, Y, i, j);
  return Y;
}

Matrix interpolate_t(const Matrix& X) {
  const Index N = coarse_size(X.rows());
  Matrix Y(N, X.cols());
  for (Index j = 0; j < X.cols(); ++j)
    for (Index c = 0; c < N; ++c) interp_t_at(X, Y, c, j);
  return Y;
}

}  // namespace serial

/* ---- OpenMP ---- */

namespace omp {

Matrix laplacian(const Matrix& X, double h) {
  Matrix Y(X.rows(), X.cols());
  const double s = 1.0 / (h * h);
  const Index n = X.rows(), k = X.cols();
#pragma omp parallel for collapse(2) schedule(static)
  for (Index j = 0; j < k; ++j)
    for (Index i = 0; i < n; ++i) laplacian_at(X, Y, s, i, j);
  return Y;
}

Matrix forward_diff(const Matrix& X, double h) {
  Matrix Y(X.rows() + 1, X.cols());
  const Index m = X.rows() + 1, k = X.cols();
#pragma omp parallel for collapse(2) schedule(static)
  for (Index j = 0; j < k; ++j)
    for (Index i = 0; i < m; ++i) diff_at(X, Y, 1.0 / h, i, j);
  return Y;
}

Matrix khatri_rao_sym(const Matrix& U) {
  const auto pairs = sym_pairs(U.cols());
  const Index n = U.rows(), m = static_cast<Index>(pairs.size());
  Matrix Y(n, m);
#pragma omp parallel for collapse(2) schedule(static)
  for (Index c = 0; c < m; ++c)
    for (Index i = 0; i < n; ++i) Y(i, c) = U(i, pairs[c].first) * U(i, pairs[c].second);
  return Y;
}

Matrix inject(const Matrix& X) {
  const Index N = coarse_size(X.rows()), k = X.cols();
  Matrix Y(N, k);
#pragma omp parallel for collapse(2) schedule(static)
  for (Index j = 0; j < k; ++j)
    for (Index c = 0; c < N; ++c) Y(c, j) = X(2 * c + 1, j);
  return Y;
}

Matrix interpolate(const Matrix& X) {
  const Index n = 2 * X.rows() + 1, k = X.cols();
  Matrix Y(n, k);
#pragma omp parallel for collapse(2) schedule(static)
  for (Index j = 0; j < k; ++j)
    for (Index i = 0; i < n; ++i) interp_at(X, Y, i, j);
  return Y;
}

Matrix interpolate_t(const Matrix& X) {
  const Index N = coarse_size(X.rows()), k = X.cols();
  Matrix Y(N, k);
#pragma omp parallel for collapse(2) schedule(static)
  for (Index j = 0; j < k; ++j)
    for (Index c = 0; c < N; ++c) interp_t_at(X, Y, c, j);
  return Y;
}

}  // namespace omp

/* ---- dispatch ---- */

namespace {
// A single thread only pays the region overhead.
bool threaded() { return omp_get_max_threads() > 1; }
bool big(const Matrix& X) { return X.size() >= kParallelThreshold && threaded(); }
}  // namespace

Matrix laplacian(const Matrix& X, double h) { return big(X) ? omp::laplacian(X, h) : serial::laplacian(X, h); }
Matrix forward_diff(const Matrix& X, double h) {
  return big(X) ? omp::forward_diff(X, h) : serial::forward_diff(X, h);
}
Matrix khatri_rao_sym(const Matrix& U) {
  return U.rows() * U.cols() * U.cols() >= 2 * kParallelThreshold && threaded() ? omp::khatri_rao_sym(U)
                                                                   : serial::khatri_rao_sym(U);
}
Matrix inject(const Matrix& X) { return big(X) ? omp::inject(X) : serial::inject(X); }
Matrix interpolate(const Matrix& X) { return big(X) ? omp::interpolate(X) : serial::interpolate(X); }
Matrix interpolate_t(const Matrix& X) { return big(X) ? omp::interpolate_t(X) : serial::interpolate_t(X); }

}  // namespace rmgls::kernels

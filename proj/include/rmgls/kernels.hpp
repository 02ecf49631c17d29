#pragma once

#include "rmgls/factored.hpp"

// Column-block kernels used by the problems and transfers. Every kernel has a
// serial reference and an OpenMP version with identical results; the plain
// entry points pick one by size.
namespace rmgls::kernels {

namespace serial {
Matrix laplacian(const Matrix& X, double h);     // tridiag(-1,2,-1)/h^2 * X
Matrix forward_diff(const Matrix& X, double h);  // (n+1) x k
Matrix khatri_rao_sym(const Matrix& U);          // columns u_i o u_j, i <= j
Matrix inject(const Matrix& X);                  // rows 1,3,5,... (0-based)
Matrix interpolate(const Matrix& X);             // linear, zero boundary
Matrix interpolate_t(const Matrix& X);           // transpose of interpolate
}  // namespace serial

namespace omp {
Matrix laplacian(const Matrix& X, double h);
Matrix forward_diff(const Matrix& X, double h);
Matrix khatri_rao_sym(const Matrix& U);
Matrix inject(const Matrix& X);
Matrix interpolate(const Matrix& X);
Matrix interpolate_t(const Matrix& X);
}  // namespace omp

inline constexpr Index kParallelThreshold = 1 << 15;

Matrix laplacian(const Matrix& X, double h);
Matrix forward_diff(const Matrix& X, double h);
Matrix khatri_rao_sym(const Matrix& U);
Matrix inject(const Matrix& X);
Matrix interpolate(const Matrix& X);
Matrix interpolate_t(const Matrix& X);

}  // namespace rmgls::kernels

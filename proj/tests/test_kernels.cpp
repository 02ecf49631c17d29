#include "rmgls/kernels.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

using namespace rmgls;
using namespace rmgls::testing;

namespace {

struct Shape {
  Index n, k;
};

class KernelAgreement : public ::testing::TestWithParam<Shape> {};

}  // namespace

// The OpenMP kernels must reproduce the serial reference exactly.
TEST_P(KernelAgreement, OmpEqualsSerial) {
  const auto [n, k] = GetParam();
  std::mt19937_64 rng(static_cast<unsigned>(n * 31 + k));
  const Matrix X = gaussian(n, k, rng);
  const double h = 1.0 / static_cast<double>(n + 1);
  EXPECT_EQ(kernels::omp::laplacian(X, h), kernels::serial::laplacian(X, h));
  EXPECT_EQ(kernels::omp::forward_diff(X, h), kernels::serial::forward_diff(X, h));
  EXPECT_EQ(kernels::omp::khatri_rao_sym(X), kernels::serial::khatri_rao_sym(X));
  EXPECT_EQ(kernels::omp::inject(X), kernels::serial::inject(X));
  EXPECT_EQ(kernels::omp::interpolate_t(X), kernels::serial::interpolate_t(X));
  const Matrix C = gaussian((n - 1) / 2, k, rng);
  EXPECT_EQ(kernels::omp::interpolate(C), kernels::serial::interpolate(C));
  EXPECT_EQ(kernels::laplacian(X, h), kernels::serial::laplacian(X, h));
}

INSTANTIATE_TEST_SUITE_P(Sizes, KernelAgreement,
                         ::testing::Values(Shape{7, 1}, Shape{31, 5}, Shape{1023, 10}, Shape{16383, 4}));

TEST(Kernels, ForwardDifferenceSquaresToStencil) {
  const GridLevel g = GridLevel::at(4);
  const Matrix L = kernels::serial::forward_diff(Matrix::Identity(g.n, g.n), g.h);
  EXPECT_EQ(L.rows(), g.n + 1);
  EXPECT_LE(rel_err(L.transpose() * L, dense_stencil(g)), 1e-12);
  EXPECT_LE(rel_err(kernels::serial::laplacian(Matrix::Identity(g.n, g.n), g.h), dense_stencil(g)), 1e-15);
}

TEST(Kernels, KhatriRaoColumnsAreProducts) {
  std::mt19937_64 rng(3);
  const Matrix U = gaussian(9, 3, rng);
  const Matrix K = kernels::serial::khatri_rao_sym(U);
  ASSERT_EQ(K.cols(), 6);
  // Each pair i <= j appears exactly once.
  for (Index i = 0; i < 3; ++i) {
    for (Index j = i; j < 3; ++j) {
      int hits = 0;
      for (Index c = 0; c < K.cols(); ++c) hits += (K.col(c) - U.col(i).cwiseProduct(U.col(j))).norm() <= 1e-15;
      EXPECT_EQ(hits, 1) << i << "," << j;
    }
  }
}

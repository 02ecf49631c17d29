#include "rmgls/errors.hpp"
#include "rmgls/transfer.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <chrono>

using namespace rmgls;
using namespace rmgls::testing;

TEST(GridLevel, SizesAndWidths) {
  for (int l = 2; l <= 14; ++l) {
    const GridLevel g = GridLevel::at(l);
    EXPECT_EQ(g.n, (Index{1} << l) - 1);
    EXPECT_DOUBLE_EQ(g.h * static_cast<double>(g.n + 1), 1.0);
  }
}

TEST(Transfer1d, InjectionSamplesTheCoarseNodes) {
  const TransferPair pair = TransferPair::between(5);
  Vector fine(pair.fine.n);
  for (Index i = 0; i < fine.size(); ++i) fine(i) = static_cast<double>(i + 1) * pair.fine.h;
  const Vector coarse = restrict_1d(fine, pair);
  ASSERT_EQ(coarse.size(), pair.coarse.n);
  for (Index i = 0; i < coarse.size(); ++i) EXPECT_DOUBLE_EQ(coarse(i), static_cast<double>(i + 1) * pair.coarse.h);
}

TEST(Transfer1d, InterpolationReproducesLinearData) {
  const TransferPair pair = TransferPair::between(5);
  auto sample = [](const GridLevel& g, auto f) {
    Vector v(g.n);
    for (Index i = 0; i < g.n; ++i) v(i) = f(static_cast<double>(i + 1) * g.h);
    return v;
  };
  // Zero Dirichlet data: a hat with its kink on a coarse node is reproduced everywhere.
  auto hat = [](double x) { return x <= 0.25 ? 4.0 * x : (1.0 - x) * 4.0 / 3.0; };
  EXPECT_LE((interpolate_1d(sample(pair.coarse, hat), pair) - sample(pair.fine, hat)).norm(), 1e-14);
  // f(x) = x is reproduced up to the last interval, where the boundary value is 0, not 1.
  auto id = [](double x) { return x; };
  const Vector got = interpolate_1d(sample(pair.coarse, id), pair), want = sample(pair.fine, id);
  EXPECT_LE((got.head(pair.fine.n - 1) - want.head(pair.fine.n - 1)).norm(), 1e-14);
}

TEST(Transfer1d, MatrixFormsMatchOperators) {
  std::mt19937_64 rng(1);
  for (TangentRestriction r : {TangentRestriction::Injection, TangentRestriction::Transpose}) {
    const TransferPair pair = TransferPair::between(4, r);
    const Vector f = gaussian(pair.fine.n, 1, rng), c = gaussian(pair.coarse.n, 1, rng);
    EXPECT_LE((restriction_matrix(pair) * f - restrict_1d(f, pair)).norm(), 1e-15);
    EXPECT_LE((prolongation_matrix(pair) * c - interpolate_1d(c, pair)).norm(), 1e-15);
    const Matrix T = tangent_restriction_matrix(pair);
    if (r == TangentRestriction::Transpose)
      EXPECT_LE((T - prolongation_matrix(pair).transpose()).norm(), 1e-15);
    else
      EXPECT_LE((T - restriction_matrix(pair)).norm(), 1e-15);
  }
}

TEST(Transfer1d, LengthMismatchThrows) {
  const TransferPair pair = TransferPair::between(4);
  EXPECT_THROW(restrict_1d(Vector::Zero(pair.fine.n + 1), pair), DimensionError);
  EXPECT_THROW(interpolate_1d(Vector::Zero(pair.fine.n), pair), DimensionError);
}

TEST(RestrictPoint, DenseEquivalenceAndOrthonormality) {
  std::mt19937_64 rng(2);
  const TransferPair pair = TransferPair::between(4);
  const FactoredMatrix X = graded_point(pair.fine.n, 3, rng);
  const FactoredMatrix Y = restrict_point(X, pair);
  const Matrix R = restriction_matrix(pair);
  EXPECT_LE((to_dense(Y) - R * to_dense(X) * R.transpose()).norm(), 1e-12);
  EXPECT_LE(Y.orthonormality_defect(), 1e-12);
}

TEST(RestrictPoint, RankOneStaysRankOne) {
  std::mt19937_64 rng(3);
  const TransferPair pair = TransferPair::between(5);
  EXPECT_EQ(restrict_point(graded_point(pair.fine.n, 1, rng), pair).rank(), 1);
}

TEST(RestrictPoint, RankDropsWhenInjectionLosesADirection) {
  std::mt19937_64 rng(4);
  const TransferPair pair = TransferPair::between(4);
  const Index n = pair.fine.n;
  // The second left vector lives only on fine nodes that injection skips.
  Matrix U = Matrix::Zero(n, 2);
  U.col(0) = gaussian(n, 1, rng);
  for (Index i = 0; i < n; i += 2) U(i, 1) = 1.0;
  U.col(0) -= U.col(1) * (U.col(1).dot(U.col(0)) / U.col(1).squaredNorm());
  U.col(0).normalize();
  U.col(1).normalize();
  const FactoredMatrix X(U, (Vector(2) << 1.0, 0.5).finished(), random_orthonormal(n, 2, rng));
  EXPECT_EQ(restrict_point(X, pair).rank(), 1);
}

TEST(RestrictPoint, LargeGridNeverGoesDense) {
  std::mt19937_64 rng(5);
  const TransferPair pair = TransferPair::between(14);  // n = 16383; a dense copy would be 2 GB
  const FactoredMatrix X = graded_point(pair.fine.n, 5, rng);
  const auto t0 = std::chrono::steady_clock::now();
  const FactoredMatrix Y = restrict_point(X, pair);
  const TangentVector xi = interpolate_tangent(random_tangent(Y, rng), X, Y, pair);
  const TangentVector back = restrict_tangent(xi, Y, X, pair);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  EXPECT_EQ(Y.n(), pair.coarse.n);
  EXPECT_EQ(back.n(), pair.coarse.n);
  EXPECT_LT(secs, 5.0);
}

class TangentTransfers : public ::testing::TestWithParam<TangentTransferMode> {};

TEST_P(TangentTransfers, ZeroMapsToZeroAndGaugeHolds) {
  std::mt19937_64 rng(6);
  const TransferPair pair = TransferPair::between(4, TangentRestriction::Transpose, GetParam());
  const FactoredMatrix Xh = graded_point(pair.fine.n, 3, rng);
  const FactoredMatrix XH = restrict_point(Xh, pair);
  EXPECT_EQ(tangent_norm(interpolate_tangent(TangentVector::zero(XH), Xh, XH, pair)), 0.0);
  EXPECT_EQ(tangent_norm(restrict_tangent(TangentVector::zero(Xh), XH, Xh, pair)), 0.0);
  const TangentVector up = interpolate_tangent(random_tangent(XH, rng), Xh, XH, pair);
  const TangentVector down = restrict_tangent(random_tangent(Xh, rng), XH, Xh, pair);
  EXPECT_TRUE(up.base().same_point(Xh));
  EXPECT_TRUE(down.base().same_point(XH));
  EXPECT_LE(up.gauge_defect(), 1e-12);
  EXPECT_LE(down.gauge_defect(), 1e-12);
}

TEST_P(TangentTransfers, LinearInTheTangent) {
  std::mt19937_64 rng(7);
  const TransferPair pair = TransferPair::between(5, TangentRestriction::Transpose, GetParam());
  const FactoredMatrix Xh = graded_point(pair.fine.n, 3, rng);
  const FactoredMatrix XH = restrict_point(Xh, pair);
  const TangentVector a = random_tangent(XH, rng), b = random_tangent(XH, rng);
  const TangentVector lhs = interpolate_tangent(tangent_axpy(2.0, a, -0.5, b), Xh, XH, pair);
  const TangentVector rhs = tangent_axpy(2.0, interpolate_tangent(a, Xh, XH, pair), -0.5,
                                         interpolate_tangent(b, Xh, XH, pair));
  EXPECT_LE(tangent_norm(tangent_axpy(1.0, lhs, -1.0, rhs)), 1e-12);
  const TangentVector c = random_tangent(Xh, rng), d = random_tangent(Xh, rng);
  const TangentVector l2 = restrict_tangent(tangent_axpy(-1.0, c, 3.0, d), XH, Xh, pair);
  const TangentVector r2 = tangent_axpy(-1.0, restrict_tangent(c, XH, Xh, pair), 3.0, restrict_tangent(d, XH, Xh, pair));
  EXPECT_LE(tangent_norm(tangent_axpy(1.0, l2, -1.0, r2)), 1e-12);
}

TEST_P(TangentTransfers, BaseMismatchThrows) {
  std::mt19937_64 rng(8);
  const TransferPair pair = TransferPair::between(4, TangentRestriction::Transpose, GetParam());
  const FactoredMatrix Xh = graded_point(pair.fine.n, 3, rng);
  const FactoredMatrix XH = restrict_point(Xh, pair);
  const FactoredMatrix other = graded_point(pair.coarse.n, 3, rng);
  EXPECT_THROW(interpolate_tangent(random_tangent(other, rng), Xh, XH, pair), BaseMismatchError);
}

INSTANTIATE_TEST_SUITE_P(Modes, TangentTransfers,
                         ::testing::Values(TangentTransferMode::Box, TangentTransferMode::Projected));

TEST(TangentTransfers, ProjectedModeMatchesDenseProjector) {
  std::mt19937_64 rng(9);
  for (TangentRestriction r : {TangentRestriction::Injection, TangentRestriction::Transpose}) {
    const TransferPair pair = TransferPair::between(4, r, TangentTransferMode::Projected);
    const FactoredMatrix Xh = graded_point(pair.fine.n, 3, rng);
    const FactoredMatrix XH = restrict_point(Xh, pair);
    const TangentVector xH = random_tangent(XH, rng), xh = random_tangent(Xh, rng);
    const Matrix P = prolongation_matrix(pair), R = tangent_restriction_matrix(pair);
    EXPECT_LE((to_dense(interpolate_tangent(xH, Xh, XH, pair)) - dense_projection(Xh, P * to_dense(xH) * P.transpose()))
                  .norm(),
              1e-11);
    EXPECT_LE(
        (to_dense(restrict_tangent(xh, XH, Xh, pair)) - dense_projection(XH, R * to_dense(xh) * R.transpose())).norm(),
        1e-11);
  }
}

TEST(TangentTransfers, TransposePairingIsFirstOrderCoherent) {
  std::mt19937_64 rng(11);
  const TransferPair pair = TransferPair::between(5, TangentRestriction::Transpose, TangentTransferMode::Projected);
  const FactoredMatrix Xh = graded_point(pair.fine.n, 4, rng);
  const FactoredMatrix XH = restrict_point(Xh, pair);
  for (int i = 0; i < 5; ++i) {
    const TangentVector g = random_tangent(Xh, rng), xi = random_tangent(XH, rng);
    const double lhs = tangent_inner(restrict_tangent(g, XH, Xh, pair), xi);
    const double rhs = tangent_inner(g, interpolate_tangent(xi, Xh, XH, pair));
    EXPECT_NEAR(lhs, rhs, 1e-10);
  }
}

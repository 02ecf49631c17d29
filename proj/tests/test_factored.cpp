#include "rmgls/errors.hpp"
#include "rmgls/factored.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

using namespace rmgls;
using namespace rmgls::testing;

TEST(Recompress, ValidSvdInputIsReproduced) {
  std::mt19937_64 rng(1);
  const FactoredMatrix X = graded_point(8, 3, rng);
  const FactoredMatrix Y = recompress(X.raw());
  EXPECT_EQ(Y.rank(), 3);
  EXPECT_LE((to_dense(Y) - to_dense(X)).norm(), 1e-13);
  for (Index i = 0; i < 3; ++i) EXPECT_NEAR(Y.S()(i), X.S()(i), 1e-14);
}

TEST(Recompress, RedundantRank3MatchesDenseSvd) {
  std::mt19937_64 rng(2);
  const Matrix G = gaussian(8, 3, rng);
  RawFactored r{G * gaussian(3, 6, rng), gaussian(6, 6, rng), gaussian(8, 6, rng)};
  r.A /= r.A.norm();
  r.B /= r.B.norm();
  const Matrix dense = to_dense(r);
  const FactoredMatrix Y = recompress(r);
  EXPECT_EQ(Y.rank(), 3);
  EXPECT_LE((to_dense(Y) - dense).norm(), 1e-13);
  Eigen::JacobiSVD<Matrix> svd(dense);
  for (Index i = 0; i < 3; ++i) EXPECT_NEAR(Y.S()(i), svd.singularValues()(i), 1e-13);
}

TEST(Recompress, ExactZeroSingularValueIsDropped) {
  std::mt19937_64 rng(3);
  const Matrix U = random_orthonormal(8, 3, rng), V = random_orthonormal(8, 3, rng);
  const Vector d = (Vector(3) << 3.0, 2.0, 0.0).finished();
  const FactoredMatrix Y = recompress({U, Matrix(d.asDiagonal()), V});
  EXPECT_EQ(Y.rank(), 2);
}

TEST(Recompress, TargetRankTruncates) {
  std::mt19937_64 rng(4);
  const FactoredMatrix X = graded_point(10, 4, rng);
  const FactoredMatrix Y = recompress(X.raw(), 2);
  EXPECT_EQ(Y.rank(), 2);
  EXPECT_NEAR((to_dense(Y) - to_dense(X)).norm(), std::hypot(0.25, 0.125), 1e-13);
}

TEST(Recompress, ZeroMatrixIsRankCollapse) {
  std::mt19937_64 rng(5);
  RawFactored r{gaussian(6, 2, rng), Matrix::Zero(2, 2), gaussian(6, 2, rng)};
  EXPECT_THROW(recompress(r), RankCollapseError);
}

TEST(Recompress, Idempotent) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 5; ++trial) {
    const FactoredMatrix a = recompress(random_raw(20, 7, rng));
    const FactoredMatrix b = recompress(a.raw());
    EXPECT_LE((to_dense(a) - to_dense(b)).norm(), 1e-13 * std::max(1.0, to_dense(a).norm()));
  }
}

TEST(Recompress, LargestEntryOfEachLeftColumnIsPositive) {
  std::mt19937_64 rng(7);
  const FactoredMatrix Y = recompress(random_raw(12, 4, rng));
  for (Index j = 0; j < Y.rank(); ++j) {
    Index i;
    Y.U().col(j).cwiseAbs().maxCoeff(&i);
    EXPECT_GT(Y.U()(i, j), 0.0);
  }
}

TEST(Recompress, NegativeToleranceIsRejected) {
  std::mt19937_64 rng(8);
  EXPECT_THROW(recompress(random_raw(5, 2, rng), std::nullopt, -1.0), PreconditionError);
}

TEST(ConcatBlkdiag, NegatedPairCancels) {
  std::mt19937_64 rng(9);
  const RawFactored x = random_raw(8, 3, rng);
  EXPECT_LE(to_dense(concat_blkdiag({x, x.scaled(-1.0)})).norm(), 1e-14 * to_dense(x).norm());
}

TEST(ConcatBlkdiag, ThreeRankOneTermsSum) {
  std::mt19937_64 rng(10);
  const RawFactored a = random_raw(8, 1, rng), b = random_raw(8, 1, rng), c = random_raw(8, 1, rng);
  const RawFactored s = concat_blkdiag({a, b, c});
  EXPECT_EQ(s.r(), 3);
  EXPECT_LE(rel_err(to_dense(s), to_dense(a) + to_dense(b) + to_dense(c)), 1e-15);
}

TEST(ConcatBlkdiag, SingleTermIsIdentity) {
  std::mt19937_64 rng(11);
  const RawFactored a = random_raw(8, 2, rng);
  const RawFactored s = concat_blkdiag({a});
  EXPECT_EQ(s.A, a.A);
  EXPECT_EQ(s.D, a.D);
  EXPECT_EQ(s.B, a.B);
}

TEST(ConcatBlkdiag, MismatchedSideLengthThrows) {
  std::mt19937_64 rng(12);
  EXPECT_THROW(concat_blkdiag({random_raw(8, 1, rng), random_raw(9, 1, rng)}), DimensionError);
}

TEST(HadamardSquare, RankOneCase) {
  Vector u = Vector::LinSpaced(6, 1.0, 2.0), v = Vector::LinSpaced(6, -1.0, 3.0);
  u.normalize();
  v.normalize();
  const FactoredMatrix X(u, Vector::Constant(1, 2.5), v);
  const FactoredMatrix H = hadamard_square(X);
  EXPECT_EQ(H.rank(), 1);
  const Matrix expect = 6.25 * u.cwiseProduct(u) * v.cwiseProduct(v).transpose();
  EXPECT_LE(rel_err(to_dense(H), expect), 1e-14);
}

TEST(HadamardSquare, RandomRank2MatchesElementwiseSquare) {
  std::mt19937_64 rng(13);
  const FactoredMatrix X = graded_point(10, 2, rng);
  const Matrix d = to_dense(X);
  EXPECT_LE((to_dense(hadamard_square(X)) - d.cwiseProduct(d)).norm(), 1e-12);
}

TEST(HadamardSquare, RankAtMostKSquaredAndNonnegative) {
  std::mt19937_64 rng(14);
  for (Index k : {1, 2, 3, 4}) {
    const FactoredMatrix X = graded_point(30, k, rng);
    const FactoredMatrix H = hadamard_square(X);
    EXPECT_LE(H.rank(), k * k);
    EXPECT_LE(H.rank(), k * (k + 1) / 2);
    EXPECT_GE(to_dense(H).minCoeff(), -1e-14);
  }
}

TEST(FrobInner, SelfInnerIsSumOfSquares) {
  std::mt19937_64 rng(15);
  const FactoredMatrix X = graded_point(12, 3, rng);
  EXPECT_NEAR(frob_inner(X, X), X.S().squaredNorm(), 1e-14);
}

TEST(FrobInner, DisjointSpansGiveZero) {
  const Matrix I = Matrix::Identity(6, 6);
  const FactoredMatrix X(I.leftCols(2), Vector::Constant(2, 1.0), I.leftCols(2));
  const FactoredMatrix Y(I.rightCols(2), Vector::Constant(2, 1.0), I.rightCols(2));
  EXPECT_LE(std::abs(frob_inner(X, Y)), 1e-13);
}

TEST(FrobInner, RandomPairMatchesDenseTrace) {
  std::mt19937_64 rng(16);
  const FactoredMatrix X = graded_point(12, 3, rng), Y = graded_point(12, 4, rng);
  const double dense = (to_dense(X).transpose() * to_dense(Y)).trace();
  EXPECT_NEAR(frob_inner(X, Y), dense, 1e-12);
}

TEST(FrobInner, SymmetricAndBilinearOverConcatenation) {
  std::mt19937_64 rng(17);
  const RawFactored a = random_raw(10, 2, rng), b = random_raw(10, 3, rng), c = random_raw(10, 2, rng);
  EXPECT_NEAR(frob_inner(a, b), frob_inner(b, a), 1e-12);
  const RawFactored ab = concat_blkdiag({a.scaled(2.0), b.scaled(-3.0)});
  EXPECT_NEAR(frob_inner(ab, c), 2.0 * frob_inner(a, c) - 3.0 * frob_inner(b, c), 1e-11);
}

TEST(FrobNorm, SmallDifferenceOfLargeTermsStaysAccurate) {
  std::mt19937_64 rng(18);
  const RawFactored a = random_raw(40, 3, rng);
  RawFactored b = a;
  b.D(0, 0) += 1e-9;
  const RawFactored diff = concat_blkdiag({a, b.scaled(-1.0)});
  const double exact = (to_dense(a) - to_dense(b)).norm();
  EXPECT_NEAR(frob_norm(diff), exact, 1e-6 * exact);
}

TEST(ToDense, RankOneUnitVectors) {
  const Matrix I = Matrix::Identity(4, 4);
  const FactoredMatrix X(I.col(0), Vector::Constant(1, 3.0), I.col(1));
  Matrix expect = Matrix::Zero(4, 4);
  expect(0, 1) = 3.0;
  EXPECT_EQ(to_dense(X), expect);
}

TEST(ToDense, DenseRoundTrip) {
  std::mt19937_64 rng(19);
  const Matrix W = gaussian(9, 9, rng);
  EXPECT_LE((to_dense(from_dense(W)) - W).norm(), 1e-13 * W.norm());
}

TEST(ToDense, AboveCapThrows) {
  const Index n = kDenseCap + 1;
  Vector u = Vector::Zero(n);
  u(0) = 1.0;
  const FactoredMatrix X(u, Vector::Constant(1, 1.0), u);
  EXPECT_THROW(to_dense(X), DenseCapError);
}

TEST(FactoredMatrix, ConstructorRejectsBadSingularValues) {
  const Matrix I = Matrix::Identity(4, 2);
  EXPECT_THROW(FactoredMatrix(I, Vector::Constant(2, 0.0), I), InvariantError);
  EXPECT_THROW(FactoredMatrix(I, (Vector(2) << 1.0, 2.0).finished(), I), InvariantError);
  EXPECT_THROW(FactoredMatrix(Matrix::Identity(4, 2), Vector::Constant(3, 1.0), Matrix::Identity(4, 2)), DimensionError);
}

TEST(FactoredMatrix, ValidateCatchesNonOrthonormalFactors) {
  std::mt19937_64 rng(20);
  const FactoredMatrix X = graded_point(10, 3, rng);
  EXPECT_NO_THROW(X.validate());
  const FactoredMatrix bad(X.U() * 1.001, X.S(), X.V());
  EXPECT_THROW(bad.validate(), InvariantError);
}

// Randomized dense-vs-factored equivalence, n up to 64.
TEST(FactoredProperty, DenseEquivalenceAcrossSizes) {
  std::mt19937_64 rng(21);
  for (Index n : {5, 16, 33, 64}) {
    for (int trial = 0; trial < 3; ++trial) {
      const Index k = 1 + static_cast<Index>(rng() % 4);
      const RawFactored a = random_raw(n, k, rng), b = random_raw(n, k + 1, rng);
      const Matrix da = to_dense(a), db = to_dense(b);
      EXPECT_LE(rel_err(to_dense(recompress(a)), da), 1e-11);
      EXPECT_LE(rel_err(to_dense(concat_blkdiag({a, b})), da + db), 1e-11);
      EXPECT_NEAR(frob_inner(a, b), (da.array() * db.array()).sum(), 1e-11 * da.norm() * db.norm());
      const FactoredMatrix X = recompress(a);
      const Matrix dx = to_dense(X);
      EXPECT_LE(rel_err(to_dense(hadamard_square(X)), dx.cwiseProduct(dx)), 1e-11);
    }
  }
}

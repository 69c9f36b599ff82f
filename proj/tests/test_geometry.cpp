#include "edmloc/errors.hpp"
#include "edmloc/geometry.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

using namespace edmloc;
using namespace testsupport;

namespace {

Eigen::MatrixXd centered(const Eigen::MatrixXd& x) { return x.colwise() - x.rowwise().mean(); }

}  // namespace

TEST(MicArray, RecentersAndKeepsOffset) {
  Eigen::MatrixXd pts(2, 3);
  pts << 1, 3, 5, 2, 2, 5;
  const MicArray a = MicArray::from_absolute(pts);
  EXPECT_NEAR(a.positions().rowwise().sum().norm(), 0.0, 1e-12);
  EXPECT_NEAR(a.offset()(0), 3.0, 1e-12);
  EXPECT_NEAR(a.offset()(1), 3.0, 1e-12);
  EXPECT_TRUE(a.absolute_positions().isApprox(pts, 1e-12));
  EXPECT_DOUBLE_EQ(a.distance(0, 1), 2.0);
}

TEST(MicArray, RejectsInvalidInput) {
  EXPECT_THROW(MicArray(Eigen::MatrixXd::Zero(4, 6)), InvalidArgument);  // P = 4
  Eigen::MatrixXd few(3, 3);
  few.setRandom();
  EXPECT_THROW(MicArray::from_absolute(few), InvalidArgument);  // M <= P
  Eigen::MatrixXd off(1, 3);
  off << 0, 1, 3;
  EXPECT_THROW(MicArray{off}, InvalidArgument);  // not centered
  Eigen::MatrixXd dup(1, 3);
  dup << -1, -1, 2;
  EXPECT_THROW(MicArray{dup}, InvalidArgument);  // coincident
  Eigen::MatrixXd nan = Eigen::MatrixXd::Zero(1, 3);
  nan(0, 0) = std::nan("");
  EXPECT_THROW(MicArray::from_absolute(nan), InvalidArgument);
}

TEST(Edm, ValidatesStructure) {
  Eigen::MatrixXd d(2, 2);
  d << 0, 1, 2, 0;
  EXPECT_THROW(Edm{d}, InvalidArgument);
  d << 1, 1, 1, 0;
  EXPECT_THROW(Edm{d}, InvalidArgument);
  d << 0, -1, -1, 0;
  EXPECT_THROW(Edm{d}, InvalidArgument);
  EXPECT_THROW(Edm(Eigen::MatrixXd::Zero(2, 3)), InvalidArgument);
}

TEST(EdmToGram, TwoPointsOnALine) {
  Eigen::MatrixXd d(2, 2);
  d << 0, 1, 1, 0;
  const Eigen::MatrixXd g = edm_to_gram(Edm(d), Eigen::Vector2d(0.5, 0.5));
  Eigen::Matrix2d expect;
  expect << 0.25, -0.25, -0.25, 0.25;
  EXPECT_TRUE(g.isApprox(expect, 1e-15));
}

TEST(EdmToGram, CoincidentPointsGiveZero) {
  const Eigen::MatrixXd g = edm_to_gram(Edm(Eigen::MatrixXd::Zero(4, 4)), Eigen::VectorXd::Constant(4, 0.25));
  EXPECT_EQ(g.norm(), 0.0);
}

TEST(EdmToGram, MatchesCenteredInnerProducts) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::MatrixXd x(3, 8);
    std::normal_distribution<double> n;
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = n(rng);
    // oracle: squared distances and X^T X built directly
    Eigen::MatrixXd d(8, 8);
    for (int i = 0; i < 8; ++i)
      for (int j = 0; j < 8; ++j) d(i, j) = (x.col(i) - x.col(j)).squaredNorm();
    const Eigen::MatrixXd xc = centered(x);
    const Eigen::MatrixXd g = edm_to_gram(Edm(d), Eigen::VectorXd::Constant(8, 1.0 / 8));
    EXPECT_LT((g - xc.transpose() * xc).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(EdmToGram, SourceAugmentedCentering) {
  // With a = [1_M; 0]/M the Gram is that of points centered on the first M only.
  std::mt19937_64 rng(8);
  Eigen::MatrixXd x(3, 7);
  std::normal_distribution<double> n;
  for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = n(rng);
  Eigen::VectorXd a = Eigen::VectorXd::Zero(7);
  a.head(6).setConstant(1.0 / 6);
  const Eigen::MatrixXd shifted = x.colwise() - x.leftCols(6).rowwise().mean();
  const Eigen::MatrixXd g = edm_to_gram(Edm::from_points(x), a);
  EXPECT_LT((g - shifted.transpose() * shifted).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_THROW(edm_to_gram(Edm::from_points(x), Eigen::VectorXd::Zero(6)), InvalidArgument);
}

TEST(Eigendecompose, SortedOrthogonalAndReconstructs) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> n;
  Eigen::MatrixXd a(6, 6);
  for (Eigen::Index i = 0; i < a.size(); ++i) a(i) = n(rng);
  const Eigen::MatrixXd g = a + a.transpose();
  const GramEval ev = eigendecompose_sym(g);
  for (int i = 0; i + 1 < 6; ++i) EXPECT_GE(ev.eigenvalues(i), ev.eigenvalues(i + 1));
  EXPECT_LT((ev.eigenvectors.transpose() * ev.eigenvectors - Eigen::MatrixXd::Identity(6, 6)).norm(), 1e-9);
  const Eigen::MatrixXd back = ev.eigenvectors * ev.eigenvalues.asDiagonal() * ev.eigenvectors.transpose();
  EXPECT_LT((back - g).norm(), 1e-9 * g.norm());
  EXPECT_FALSE(ev.cost.has_value());
}

TEST(Eigendecompose, SymmetrizesSmallAsymmetry) {
  Eigen::Matrix2d g;
  g << 2, 1 + 1e-13, 1, 2;
  const GramEval ev = eigendecompose_sym(g);
  EXPECT_NEAR(ev.eigenvalues(0), 3.0, 1e-12);
  EXPECT_NEAR(ev.eigenvalues(1), 1.0, 1e-12);
}

TEST(TailEigenMagnitude, SumsMagnitudesBeyondKeep) {
  const Eigen::Vector4d lambda(5.0, 2.0, -0.5, -3.0);
  std::mt19937_64 rng(10);
  const Eigen::Matrix4d q = [&] {
    std::normal_distribution<double> n;
    Eigen::Matrix4d a;
    for (int i = 0; i < 16; ++i) a(i) = n(rng);
    return Eigen::Matrix4d(Eigen::HouseholderQR<Eigen::Matrix4d>(a).householderQ());
  }();
  const Eigen::Matrix4d g = q * lambda.asDiagonal() * q.transpose();
  EXPECT_NEAR(tail_eigen_magnitude(g, 1), 5.5, 1e-12);
  EXPECT_NEAR(tail_eigen_magnitude(g, 2), 3.5, 1e-12);
  EXPECT_NEAR(tail_eigen_magnitude(g, 4), 0.0, 1e-12);
}

TEST(Reconstruct, RecoversPointsUpToOrthogonalMap) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Matrix3Xd x = centered(random_mics(rng, 7, Eigen::Vector3d::Zero(), 2.0, 0.05));
    const GramEval ev = eigendecompose_sym(x.transpose() * x);
    const RelativePositions rel = reconstruct_relative_positions(ev, 3);
    EXPECT_FALSE(rel.degenerate);
    const ProcrustesMap map = procrustes(rel.points, x);
    EXPECT_LT((map.rotation * rel.points - x).norm(), 1e-9);
    EXPECT_LT(map.residual, 1e-9);
    EXPECT_LT((map.rotation.transpose() * map.rotation - Eigen::Matrix3d::Identity()).norm(), 1e-12);
  }
}

TEST(Reconstruct, ClampsZeroAndRejectsNegative) {
  // collinear points: second and third eigenvalue are zero
  Eigen::MatrixXd x(3, 4);
  x << -1.5, -0.5, 0.5, 1.5, 0, 0, 0, 0, 0, 0, 0, 0;
  const RelativePositions rel = reconstruct_relative_positions(eigendecompose_sym(x.transpose() * x), 3);
  EXPECT_TRUE(rel.degenerate);
  EXPECT_LT(rel.points.bottomRows(2).norm(), 1e-7);

  GramEval bad;
  bad.eigenvalues = Eigen::Vector3d(1.0, -0.5, -1.0);
  bad.eigenvectors = Eigen::Matrix3d::Identity();
  EXPECT_THROW(reconstruct_relative_positions(bad, 2), DegenerateGeometry);
}

TEST(Procrustes, HandlesReflections) {
  std::mt19937_64 rng(12);
  const Eigen::Matrix3Xd a = centered(random_mics(rng, 6, Eigen::Vector3d::Zero(), 1.0, 0.05));
  const Eigen::Matrix3d q = random_orthogonal(rng, true);
  const ProcrustesMap map = procrustes(a, q * a);
  EXPECT_LT((map.rotation - q).norm(), 1e-10);
  EXPECT_NEAR(map.rotation.determinant(), -1.0, 1e-12);
  EXPECT_FALSE(map.rank_deficient);
}

TEST(Procrustes, FlagsRankDeficientInput) {
  Eigen::MatrixXd a(2, 3);
  a << 1, -1, 0, 0, 0, 0;
  const ProcrustesMap map = procrustes(a, a);
  EXPECT_TRUE(map.rank_deficient);
  EXPECT_THROW(procrustes(a, Eigen::MatrixXd::Zero(3, 3)), InvalidArgument);
}

TEST(Procrustes, AbsolutePositionFromLastColumn) {
  Eigen::MatrixXd rel(2, 3);
  rel << 1, -1, 0.5, 0, 0, 2;
  ProcrustesMap map;
  map.rotation = Eigen::Matrix2d::Identity();
  map.rotation(0, 0) = -1;
  const Eigen::VectorXd p = absolute_position_from_relative(rel, map);
  EXPECT_DOUBLE_EQ(p(0), -0.5);
  EXPECT_DOUBLE_EQ(p(1), 2.0);
}

TEST(MicArray, TransformedPreservesDistances) {
  std::mt19937_64 rng(13);
  const MicArray a = MicArray::from_absolute(random_mics(rng, 6, Eigen::Vector3d(3, 3, 1), 2.0, 0.1));
  const MicArray b = a.transformed(random_orthogonal(rng, false));
  EXPECT_LT((a.edm().matrix() - b.edm().matrix()).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_TRUE(a.offset().isApprox(b.offset()));
  EXPECT_LT((a.gram() - b.gram()).cwiseAbs().maxCoeff(), 1e-12);
}

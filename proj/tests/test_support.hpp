#pragma once

// Geometry generators and direct-formula oracles shared by the tests. These
// deliberately avoid the library's own TDOA helpers.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <random>

namespace testsupport {

inline constexpr double kNu = 343.0;

inline Eigen::Vector3d uniform_in_cube(std::mt19937_64& rng, const Eigen::Vector3d& center, double side) {
  std::uniform_real_distribution<double> u(-side / 2, side / 2);
  return center + Eigen::Vector3d(u(rng), u(rng), u(rng));
}

inline Eigen::Vector3d random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  Eigen::Vector3d v(n(rng), n(rng), n(rng));
  return v.normalized();
}

/// M points in a cube, pairwise at least `min_spacing` apart, absolute coordinates.
inline Eigen::Matrix3Xd random_mics(std::mt19937_64& rng, int m, const Eigen::Vector3d& center, double side,
                                    double min_spacing) {
  Eigen::Matrix3Xd mics(3, m);
  for (int i = 0; i < m; ++i) {
    bool ok = false;
    while (!ok) {
      mics.col(i) = uniform_in_cube(rng, center, side);
      ok = true;
      for (int j = 0; j < i; ++j) ok = ok && (mics.col(i) - mics.col(j)).norm() >= min_spacing;
    }
  }
  return mics;
}

/// Random orthogonal matrix; `reflect` forces det = -1.
inline Eigen::Matrix3d random_orthogonal(std::mt19937_64& rng, bool reflect) {
  std::normal_distribution<double> n;
  Eigen::Matrix3d a;
  for (int i = 0; i < 9; ++i) a(i) = n(rng);
  Eigen::HouseholderQR<Eigen::Matrix3d> qr(a);
  Eigen::Matrix3d q = qr.householderQ();
  if ((q.determinant() < 0) != reflect) q.col(0) *= -1.0;
  return q;
}

/// Arrival time at every microphone minus the arrival time at `ref`.
inline Eigen::VectorXd exact_tdoas(const Eigen::Matrix3Xd& mics_abs, const Eigen::Vector3d& source, int ref) {
  Eigen::VectorXd t(mics_abs.cols());
  const double d_ref = (mics_abs.col(ref) - source).norm();
  for (Eigen::Index m = 0; m < mics_abs.cols(); ++m) t(m) = ((mics_abs.col(m) - source).norm() - d_ref) / kNu;
  return t;
}

/// Plane wave from direction v: centered arrival delays.
inline Eigen::VectorXd exact_plane_wave(const Eigen::Matrix3Xd& mics_abs, const Eigen::Vector3d& v) {
  const Eigen::Vector3d c = mics_abs.rowwise().mean();
  Eigen::VectorXd t(mics_abs.cols());
  for (Eigen::Index m = 0; m < mics_abs.cols(); ++m) t(m) = -(mics_abs.col(m) - c).dot(v) / kNu;
  return t;
}

inline double angle_deg(const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
  return std::acos(std::clamp(a.dot(b) / (a.norm() * b.norm()), -1.0, 1.0)) * 180.0 / M_PI;
}

}  // namespace testsupport

#include "edmloc/geometry.hpp"

#include "edmloc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace edmloc {

namespace {

void require_finite(const Eigen::MatrixXd& m, const char* what) {
  if (!m.allFinite()) throw InvalidArgument(std::string(what) + ": non-finite entries");
}

}  // namespace

MicArray MicArray::from_absolute(const Eigen::MatrixXd& positions) {
  if (positions.cols() == 0) throw InvalidArgument("MicArray: no microphones");
  require_finite(positions, "MicArray");
  Eigen::VectorXd centroid = positions.rowwise().mean();
  Eigen::MatrixXd centered = positions.colwise() - centroid;
  return MicArray(std::move(centered), std::move(centroid));
}

MicArray::MicArray(Eigen::MatrixXd centered, Eigen::VectorXd offset)
    : positions_(std::move(centered)), offset_(std::move(offset)) {
  const int p = dim();
  const int m = count();
  if (p < 1 || p > 3) throw InvalidArgument("MicArray: dimension must be 1, 2 or 3");
  if (m <= p) throw InvalidArgument("MicArray: need more microphones than dimensions");
  require_finite(positions_, "MicArray");
  if (offset_.size() == 0) offset_ = Eigen::VectorXd::Zero(p);
  if (offset_.size() != p) throw InvalidArgument("MicArray: offset dimension mismatch");

  const double scale = std::max(1.0, positions_.cwiseAbs().maxCoeff());
  if (positions_.rowwise().mean().norm() > 1e-12 * scale)
    throw InvalidArgument("MicArray: positions are not centered");
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j)
      if (!(distance(i, j) > 0.0)) throw InvalidArgument("MicArray: coincident microphones");
}

Eigen::MatrixXd MicArray::absolute_positions() const { return positions_.colwise() + offset_; }

Edm MicArray::edm() const { return Edm::from_points(positions_); }

Eigen::MatrixXd MicArray::gram() const { return positions_.transpose() * positions_; }

MicArray MicArray::transformed(const Eigen::MatrixXd& orthogonal) const {
  if (orthogonal.rows() != dim() || orthogonal.cols() != dim())
    throw InvalidArgument("MicArray::transformed: shape mismatch");
  Eigen::MatrixXd rotated = orthogonal * positions_;
  // rotation of a centered set stays centered up to rounding
  rotated = rotated.colwise() - rotated.rowwise().mean();
  return MicArray(std::move(rotated), offset_);
}

Edm::Edm(Eigen::MatrixXd squared_distances) : d_(std::move(squared_distances)) {
  if (d_.rows() != d_.cols()) throw InvalidArgument("Edm: matrix must be square");
  require_finite(d_, "Edm");
  const double scale = std::max(1.0, d_.cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < d_.rows(); ++i) {
    if (d_(i, i) != 0.0) throw InvalidArgument("Edm: diagonal must be zero");
    for (Eigen::Index j = 0; j < i; ++j) {
      if (std::abs(d_(i, j) - d_(j, i)) > 1e-12 * scale) throw InvalidArgument("Edm: matrix must be symmetric");
      if (d_(i, j) < 0.0) throw InvalidArgument("Edm: negative squared distance");
    }
  }
}

Edm Edm::from_points(const Eigen::MatrixXd& points) {
  require_finite(points, "Edm::from_points");
  const Eigen::Index n = points.cols();
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) d(i, j) = d(j, i) = (points.col(i) - points.col(j)).squaredNorm();
  return Edm(std::move(d));
}

Eigen::MatrixXd edm_to_gram(const Edm& edm, const Eigen::VectorXd& centering) {
  const Eigen::MatrixXd& d = edm.matrix();
  if (centering.size() != d.rows()) throw InvalidArgument("edm_to_gram: centering vector length mismatch");
  if (!centering.allFinite()) throw InvalidArgument("edm_to_gram: non-finite centering vector");

  // (I - 1a^T) D (I - a1^T) = D - (Da)1^T - 1(Da)^T + (a^T D a) 1 1^T
  const Eigen::VectorXd da = d * centering;
  const double ada = centering.dot(da);
  const Eigen::Index n = d.rows();
  Eigen::MatrixXd g(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i) g(i, j) = -0.5 * (d(i, j) - da(i) - da(j) + ada);
  return g;
}

GramEval eigendecompose_sym(const Eigen::MatrixXd& gram) {
  if (gram.rows() != gram.cols()) throw InvalidArgument("eigendecompose_sym: matrix must be square");
  require_finite(gram, "eigendecompose_sym");
  const Eigen::MatrixXd sym = 0.5 * (gram + gram.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
  if (solver.info() != Eigen::Success) throw DegenerateGeometry("eigendecompose_sym: solver did not converge");

  // Eigen returns ascending order
  GramEval out;
  out.eigenvalues = solver.eigenvalues().reverse();
  out.eigenvectors = solver.eigenvectors().rowwise().reverse();
  return out;
}

double tail_eigen_magnitude(const Eigen::MatrixXd& symmetric, int keep) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(symmetric, Eigen::EigenvaluesOnly);
  const Eigen::VectorXd& ascending = solver.eigenvalues();
  const Eigen::Index tail = ascending.size() - keep;
  double sum = 0.0;
  for (Eigen::Index i = 0; i < tail; ++i) sum += std::abs(ascending(i));
  return sum;
}

RelativePositions reconstruct_relative_positions(const GramEval& ev, int dim) {
  const Eigen::Index n = ev.eigenvalues.size();
  if (dim < 1 || dim > n) throw InvalidArgument("reconstruct_relative_positions: invalid dimension");
  if (ev.eigenvectors.rows() != n || ev.eigenvectors.cols() != n)
    throw InvalidArgument("reconstruct_relative_positions: eigenvector shape mismatch");

  const double tol = kEigenTolerance * std::abs(ev.eigenvalues(0));
  RelativePositions out;
  out.points = Eigen::MatrixXd::Zero(dim, n);
  for (int i = 0; i < dim; ++i) {
    double lambda = ev.eigenvalues(i);
    if (lambda < -tol)
      throw DegenerateGeometry("reconstruct_relative_positions: negative eigenvalue " + std::to_string(lambda) +
                               " among the leading " + std::to_string(dim));
    if (lambda <= tol) {
      out.degenerate = true;
      continue;
    }
    out.points.row(i) = std::sqrt(lambda) * ev.eigenvectors.col(i).transpose();
  }
  return out;
}

ProcrustesMap procrustes(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw InvalidArgument("procrustes: shape mismatch");
  require_finite(a, "procrustes");
  require_finite(b, "procrustes");

  const Eigen::MatrixXd cross = a * b.transpose();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
  ProcrustesMap out;
  out.rotation = svd.matrixV() * svd.matrixU().transpose();
  out.residual = (out.rotation * a - b).norm();
  const Eigen::VectorXd& sv = svd.singularValues();
  out.rank_deficient = sv.size() > 0 && sv(sv.size() - 1) <= 1e-12 * std::max(sv(0), 1e-300);
  return out;
}

Eigen::VectorXd absolute_position_from_relative(const Eigen::MatrixXd& relative, const ProcrustesMap& map) {
  if (relative.cols() == 0 || map.rotation.cols() != relative.rows())
    throw InvalidArgument("absolute_position_from_relative: shape mismatch");
  return map.rotation * relative.col(relative.cols() - 1);
}

}  // namespace edmloc

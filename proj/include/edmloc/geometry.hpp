#pragma once

// Geometry core: microphone arrays, Euclidean distance matrices, Gram
// matrices and their eigendecompositions, point reconstruction and
// orthogonal Procrustes alignment.

#include <Eigen/Dense>

#include <optional>

namespace edmloc {

class Edm;

/// Microphone positions stored as a P x M matrix whose column mean is zero.
/// The centroid removed at construction is kept as offset(), so absolute
/// coordinates can always be recovered.
class MicArray {
 public:
  /// Recenters absolute positions (P x M) on their centroid.
  static MicArray from_absolute(const Eigen::MatrixXd& positions);

  /// `centered` must already have zero column mean (within 1e-12 m).
  explicit MicArray(Eigen::MatrixXd centered, Eigen::VectorXd offset = {});

  int dim() const { return static_cast<int>(positions_.rows()); }
  int count() const { return static_cast<int>(positions_.cols()); }

  const Eigen::MatrixXd& positions() const { return positions_; }
  const Eigen::VectorXd& offset() const { return offset_; }
  Eigen::VectorXd absolute(int m) const { return positions_.col(m) + offset_; }
  Eigen::MatrixXd absolute_positions() const;

  double distance(int i, int j) const { return (positions_.col(i) - positions_.col(j)).norm(); }

  Edm edm() const;
  /// G_MM = M^T M.
  Eigen::MatrixXd gram() const;

  /// Applies an orthogonal transform to the centered positions (offset kept).
  MicArray transformed(const Eigen::MatrixXd& orthogonal) const;

 private:
  Eigen::MatrixXd positions_;
  Eigen::VectorXd offset_;
};

/// Squared-distance matrix: symmetric, zero diagonal, non-negative.
class Edm {
 public:
  explicit Edm(Eigen::MatrixXd squared_distances);
  static Edm from_points(const Eigen::MatrixXd& points);

  const Eigen::MatrixXd& matrix() const { return d_; }
  int size() const { return static_cast<int>(d_.rows()); }

 private:
  Eigen::MatrixXd d_;
};

struct GramEval {
  Eigen::VectorXd eigenvalues;   // descending by signed value
  Eigen::MatrixXd eigenvectors;  // column i belongs to eigenvalues(i)
  std::optional<double> cost;
};

struct ProcrustesMap {
  Eigen::MatrixXd rotation;  // orthogonal, det = +1 or -1
  double residual = 0.0;     // || R A - B ||_F
  bool rank_deficient = false;
};

struct RelativePositions {
  Eigen::MatrixXd points;  // P x N
  bool degenerate = false; // at least one of the top-P eigenvalues was clamped to zero
};

/// -1/2 (I - 1 a^T) D (I - a 1^T).
Eigen::MatrixXd edm_to_gram(const Edm& edm, const Eigen::VectorXd& centering);

/// Symmetrizes, then solves. Eigenpairs come back sorted descending.
GramEval eigendecompose_sym(const Eigen::MatrixXd& gram);

/// Sum of |lambda_i| over all but the `keep` largest (signed) eigenvalues.
/// This is the hot path of both EDM cost functions, so eigenvectors are skipped.
double tail_eigen_magnitude(const Eigen::MatrixXd& symmetric, int keep);

/// Rows are sqrt(lambda_i) * s_i^T for the P largest eigenpairs. Eigenvalues
/// within 1e-9 * lambda_1 of zero are clamped; more negative ones throw
/// DegenerateGeometry.
RelativePositions reconstruct_relative_positions(const GramEval& ev, int dim);

/// R = V U^T from svd(A B^T) = U Q V^T, minimizing ||R A - B||_F over all
/// orthogonal R (reflections included).
ProcrustesMap procrustes(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

/// R * (last column of the relative positions matrix).
Eigen::VectorXd absolute_position_from_relative(const Eigen::MatrixXd& relative, const ProcrustesMap& map);

/// Relative eigenvalue tolerance used for rank and clamping decisions.
inline constexpr double kEigenTolerance = 1e-9;

}  // namespace edmloc

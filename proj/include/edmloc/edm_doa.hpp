#pragma once

// Far-field DOA estimation from the rank-reduced microphone Gram matrix.
//
// For a plane wave from unit direction v, the centered arrival delays are
// tau~_m = -m_m^T v / nu (microphones further along v hear the wave first).
// Subtracting nu^2 tau~ tau~^T from G_MM removes the component of the array
// along v, leaving a matrix of rank at most P - 1.

#include "edmloc/geometry.hpp"
#include "edmloc/tdoa.hpp"

#include <optional>
#include <vector>

namespace edmloc {

struct DoaEstimate {
  Eigen::VectorXd direction;  // unit vector, length P
  double azimuth = 0.0;       // radians, (-pi, pi]; 0 at the poles
  double elevation = 0.0;     // radians, 0 for planar arrays
  Combination combination;
  double cost = 0.0;
};

struct DoaEstimates {
  std::vector<DoaEstimate> sources;
  bool shortfall = false;
};

struct DoaScore {
  Combination combination;
  double cost = 0.0;  // +inf when the combination cannot be reconstructed
};

/// G_MM - nu^2 tau~ tau~^T. `centered_tdoas` must sum to zero within 1e-9 s.
Eigen::MatrixXd rank_reduced_gram(const MicArray& array, const Eigen::VectorXd& centered_tdoas, double speed_of_sound);

/// Sum of |sigma_i| over all but the P-1 largest eigenvalues of G^-.
double cost_I(const MicArray& array, const Eigen::VectorXd& centered_tdoas, double speed_of_sound);

/// P x M matrix: first row -nu tau~^T, then sqrt(sigma_i) s_i^T for the P-1
/// largest eigenpairs of G^-. Small negative eigenvalues are clamped; a
/// clearly negative one throws DegenerateGeometry.
Eigen::MatrixXd reconstruct_mar(const GramEval& reduced, const Eigen::VectorXd& centered_tdoas, double speed_of_sound,
                                int dim);

/// Unit direction from the relative coordinates: R' e_1 with R' the
/// Procrustes map of `mar` onto the array.
Eigen::VectorXd direction_from_mar(const Eigen::MatrixXd& mar, const MicArray& array);

/// Fills azimuth and elevation from a direction vector (P = 2 or 3).
void set_angles(DoaEstimate& est);

/// Unit vector for azimuth/elevation in radians.
Eigen::Vector3d direction_from_angles(double azimuth, double elevation);

/// cost_I for every combination, in enumeration order.
std::vector<DoaScore> score_doa_combinations(const MicArray& array, const CandidateSet& set, double speed_of_sound);

/// S combinations with the smallest I(q), mutually differing in at least
/// `min_diff` entries (default M - 2).
DoaEstimates estimate_doas(const MicArray& array, const CandidateSet& set, int sources, double speed_of_sound,
                           std::optional<int> min_diff = std::nullopt);

}  // namespace edmloc

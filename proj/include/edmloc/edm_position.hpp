#pragma once

// EDM-based position estimation for one or more sources.
//
// For a combination of candidate TDOAs the source distances are
// d_m(alpha) = alpha + nu * tau_m, where alpha is the unknown distance to the
// reference microphone. The Gram matrix of the augmented EDM has rank P only
// at the true alpha; the cost J sums the magnitudes of all eigenvalues beyond
// the P largest.

#include "edmloc/geometry.hpp"
#include "edmloc/tdoa.hpp"

#include <optional>
#include <vector>

namespace edmloc {

inline constexpr double kDefaultSpeedOfSound = 343.0;

struct AlphaGrid {
  double min = 0.0;
  double max = 6.0;
  double step = 0.01;

  void validate() const;
  int size() const;
  double at(int i) const { return min + i * step; }
};

struct PositionEstimate {
  Eigen::VectorXd position;  // absolute coordinates (array offset added back)
  double alpha_hat = 0.0;
  Combination combination;
  double cost_min = 0.0;
  GramEval gram;
  bool degenerate = false;
};

struct PositionEstimates {
  std::vector<PositionEstimate> sources;
  bool shortfall = false;  // fewer admissible combinations than requested sources
};

struct AlphaMinimum {
  double alpha = 0.0;
  double cost = 0.0;
};

struct CombinationScore {
  Combination combination;
  double alpha = 0.0;
  double cost = 0.0;  // +inf when infeasible
};

/// Smallest alpha keeping every d_m(alpha) non-negative: max(0, -nu * min tau).
double alpha_lower_bound(const Eigen::VectorXd& tdoas, double speed_of_sound);

/// (M+1) x (M+1) EDM of the microphones plus the hypothesized source.
/// `tdoas` has one entry per microphone, 0 at the reference.
Edm build_source_edm(const MicArray& array, double alpha, const Eigen::VectorXd& tdoas, double speed_of_sound);

/// Gram matrix of build_source_edm with centering a = [1_M; 0] / M.
Eigen::MatrixXd source_gram(const MicArray& array, double alpha, const Eigen::VectorXd& tdoas, double speed_of_sound);

double cost_J(const MicArray& array, double alpha, const Eigen::VectorXd& tdoas, double speed_of_sound);

/// J sampled on the grid; infeasible points are +inf.
std::vector<double> cost_curve(const MicArray& array, const Eigen::VectorXd& tdoas, const AlphaGrid& grid,
                               double speed_of_sound);

/// Grid search over the feasible part of the grid, then parabolic refinement
/// around the grid minimum. The returned cost is J evaluated at the refined
/// alpha. Throws InfeasibleCombination when no grid point is feasible.
AlphaMinimum minimize_alpha(const MicArray& array, const Eigen::VectorXd& tdoas, const AlphaGrid& grid,
                            double speed_of_sound);

/// minimize_alpha for every combination, in enumeration order.
std::vector<CombinationScore> score_combinations(const MicArray& array, const CandidateSet& set, const AlphaGrid& grid,
                                                 double speed_of_sound);

/// Picks the S combinations with the smallest cost minima such that every pick
/// differs from all earlier picks in at least `min_diff` entries (default
/// M - 2), then maps each relative reconstruction onto the array by Procrustes.
PositionEstimates estimate_positions(const MicArray& array, const CandidateSet& set, int sources, const AlphaGrid& grid,
                                     double speed_of_sound, std::optional<int> min_diff = std::nullopt);

/// True when `candidate` differs from every already chosen combination in at
/// least `min_diff` entries.
bool admissible(const Combination& candidate, const std::vector<Combination>& chosen, int min_diff);

}  // namespace edmloc

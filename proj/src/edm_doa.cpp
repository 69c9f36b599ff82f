#include "edmloc/edm_doa.hpp"

#include "edmloc/edm_position.hpp"
#include "edmloc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

namespace edmloc {

namespace {

void check_centered(const MicArray& array, const Eigen::VectorXd& tau, double speed_of_sound) {
  if (tau.size() != array.count()) throw InvalidArgument("edm-doa: one TDOA per microphone required");
  if (!tau.allFinite()) throw InvalidArgument("edm-doa: non-finite TDOA");
  if (!(speed_of_sound > 0.0)) throw InvalidArgument("edm-doa: speed of sound must be positive");
  if (std::abs(tau.sum()) > 1e-9) throw InvalidArgument("edm-doa: TDOAs must be centered");
}

}  // namespace

Eigen::MatrixXd rank_reduced_gram(const MicArray& array, const Eigen::VectorXd& centered_tdoas, double speed_of_sound) {
  check_centered(array, centered_tdoas, speed_of_sound);
  const double nu2 = speed_of_sound * speed_of_sound;
  return array.gram() - nu2 * centered_tdoas * centered_tdoas.transpose();
}

double cost_I(const MicArray& array, const Eigen::VectorXd& centered_tdoas, double speed_of_sound) {
  return tail_eigen_magnitude(rank_reduced_gram(array, centered_tdoas, speed_of_sound), array.dim() - 1);
}

Eigen::MatrixXd reconstruct_mar(const GramEval& reduced, const Eigen::VectorXd& centered_tdoas, double speed_of_sound,
                                int dim) {
  const Eigen::Index m = centered_tdoas.size();
  if (dim < 1 || reduced.eigenvalues.size() != m || reduced.eigenvectors.rows() != m || dim - 1 > m)
    throw InvalidArgument("reconstruct_mar: shape mismatch");

  Eigen::MatrixXd mar(dim, m);
  mar.row(0) = -speed_of_sound * centered_tdoas.transpose();
  if (dim == 1) return mar;

  const double scale = std::max(std::abs(reduced.eigenvalues(0)), std::numeric_limits<double>::min());
  const double tol = kEigenTolerance * scale;
  for (int i = 0; i < dim - 1; ++i) {
    double sigma = reduced.eigenvalues(i);
    if (sigma < -tol) throw DegenerateGeometry("reconstruct_mar: negative leading eigenvalue");
    sigma = std::max(sigma, 0.0);
    mar.row(i + 1) = std::sqrt(sigma) * reduced.eigenvectors.col(i).transpose();
  }
  return mar;
}

Eigen::VectorXd direction_from_mar(const Eigen::MatrixXd& mar, const MicArray& array) {
  const ProcrustesMap map = procrustes(mar, array.positions());
  Eigen::VectorXd v = map.rotation.col(0);
  return v / v.norm();
}

void set_angles(DoaEstimate& est) {
  const Eigen::VectorXd& v = est.direction;
  if (v.size() < 2) {
    est.azimuth = v(0) >= 0.0 ? 0.0 : std::numbers::pi;
    est.elevation = 0.0;
    return;
  }
  const double horizontal = std::hypot(v(0), v(1));
  est.azimuth = horizontal < 1e-12 ? 0.0 : std::atan2(v(1), v(0));
  if (est.azimuth == -std::numbers::pi) est.azimuth = std::numbers::pi;
  est.elevation = v.size() > 2 ? std::asin(std::clamp(v(2), -1.0, 1.0)) : 0.0;
}

Eigen::Vector3d direction_from_angles(double azimuth, double elevation) {
  return {std::cos(elevation) * std::cos(azimuth), std::cos(elevation) * std::sin(azimuth), std::sin(elevation)};
}

std::vector<DoaScore> score_doa_combinations(const MicArray& array, const CandidateSet& set, double speed_of_sound) {
  set.validate();
  if (set.mic_count != array.count()) throw InvalidArgument("score_doa_combinations: candidate set does not match array");
  std::vector<DoaScore> out;
  out.reserve(set.combination_count());
  for (const Combination& c : enumerate_combinations(set))
    out.push_back({c, cost_I(array, center_tdoas(set, c), speed_of_sound)});
  return out;
}

DoaEstimates estimate_doas(const MicArray& array, const CandidateSet& set, int sources, double speed_of_sound,
                           std::optional<int> min_diff) {
  if (sources < 1) throw InvalidArgument("estimate_doas: need at least one source");
  const int diff = min_diff.value_or(array.count() - 2);

  const std::vector<DoaScore> scores = score_doa_combinations(array, set, speed_of_sound);
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a].cost < scores[b].cost; });

  DoaEstimates out;
  std::vector<Combination> chosen;
  for (std::size_t idx : order) {
    if (static_cast<int>(out.sources.size()) == sources) break;
    const DoaScore& s = scores[idx];
    if (!admissible(s.combination, chosen, diff)) continue;

    const Eigen::VectorXd tau = center_tdoas(set, s.combination);
    const GramEval ev = eigendecompose_sym(rank_reduced_gram(array, tau, speed_of_sound));
    Eigen::MatrixXd mar;
    try {
      mar = reconstruct_mar(ev, tau, speed_of_sound, array.dim());
    } catch (const DegenerateGeometry&) {
      continue;
    }
    DoaEstimate est;
    est.direction = direction_from_mar(mar, array);
    est.combination = s.combination;
    est.cost = s.cost;
    set_angles(est);
    chosen.push_back(s.combination);
    out.sources.push_back(std::move(est));
  }
  out.shortfall = static_cast<int>(out.sources.size()) < sources;
  return out;
}

}  // namespace edmloc

#include "edmloc/edm_position.hpp"

#include "edmloc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace edmloc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_inputs(const MicArray& array, const Eigen::VectorXd& tdoas, double speed_of_sound) {
  if (tdoas.size() != array.count()) throw InvalidArgument("EDM position: one TDOA per microphone required");
  if (!tdoas.allFinite()) throw InvalidArgument("EDM position: non-finite TDOA");
  if (!(speed_of_sound > 0.0)) throw InvalidArgument("EDM position: speed of sound must be positive");
}

// Source distances for a given alpha; tiny negative rounding is clamped.
Eigen::VectorXd source_distances(double alpha, const Eigen::VectorXd& tdoas, double speed_of_sound) {
  Eigen::VectorXd d = (alpha + speed_of_sound * tdoas.array()).matrix();
  for (Eigen::Index m = 0; m < d.size(); ++m) {
    if (d(m) < -1e-12) throw InvalidArgument("build_source_edm: alpha below the feasible lower bound");
    d(m) = std::max(d(m), 0.0);
  }
  return d;
}

// Evaluates Gram matrices for one array without re-deriving the microphone block.
class GramBuilder {
 public:
  GramBuilder(const MicArray& array, double speed_of_sound) : nu_(speed_of_sound), m_(array.count()) {
    d_mm_ = array.edm().matrix();
    row_mean_ = d_mm_.rowwise().mean();
    mean_all_ = row_mean_.mean();
  }

  // Same as edm_to_gram on the augmented EDM with a = [1_M; 0] / M.
  Eigen::MatrixXd gram(double alpha, const Eigen::VectorXd& tdoas) const {
    const Eigen::VectorXd d = source_distances(alpha, tdoas, nu_);
    const Eigen::VectorXd dsq = d.array().square().matrix();
    // (D a) for the mic rows is row_mean_, for the source row it is mean(dsq);
    // a^T D a = mean_all_.
    const double src_mean = dsq.mean();
    Eigen::MatrixXd g(m_ + 1, m_ + 1);
    for (int j = 0; j < m_; ++j)
      for (int i = 0; i < m_; ++i) g(i, j) = -0.5 * (d_mm_(i, j) - row_mean_(i) - row_mean_(j) + mean_all_);
    for (int i = 0; i < m_; ++i) g(i, m_) = g(m_, i) = -0.5 * (dsq(i) - row_mean_(i) - src_mean + mean_all_);
    g(m_, m_) = -0.5 * (-2.0 * src_mean + mean_all_);
    return g;
  }

  double cost(double alpha, const Eigen::VectorXd& tdoas, int dim) const { return tail_eigen_magnitude(gram(alpha, tdoas), dim); }

 private:
  double nu_;
  int m_;
  Eigen::MatrixXd d_mm_;
  Eigen::VectorXd row_mean_;
  double mean_all_ = 0.0;
};

AlphaMinimum minimize_with(const GramBuilder& builder, int dim, const Eigen::VectorXd& tdoas, const AlphaGrid& grid,
                           double speed_of_sound) {
  const double lower = alpha_lower_bound(tdoas, speed_of_sound);
  const int n = grid.size();
  int first = 0;
  while (first < n && grid.at(first) < lower - 1e-12) ++first;
  if (first >= n) throw InfeasibleCombination("minimize_alpha: no feasible grid point");

  std::vector<double> cost(n, kInf);
  int best = first;
  for (int i = first; i < n; ++i) {
    cost[i] = builder.cost(std::max(grid.at(i), lower), tdoas, dim);
    if (cost[i] < cost[best]) best = i;
  }

  AlphaMinimum out{std::max(grid.at(best), lower), cost[best]};
  if (best > first && best + 1 < n) {
    // J is V-shaped at its zero (eigenvalues cross zero linearly), so the
    // parabola goes through J^2, which is locally quadratic.
    const double left = cost[best - 1] * cost[best - 1], mid = cost[best] * cost[best],
                 right = cost[best + 1] * cost[best + 1];
    const double denom = left - 2.0 * mid + right;
    double delta = denom > 0.0 ? 0.5 * (left - right) / denom : 0.0;
    delta = std::clamp(delta, -1.0, 1.0);
    out.alpha = std::max(grid.at(best) + delta * grid.step, lower);
    out.cost = builder.cost(out.alpha, tdoas, dim);
  }
  return out;
}

}  // namespace

void AlphaGrid::validate() const {
  if (!(min >= 0.0) || !(max > min) || !(step > 0.0) || !std::isfinite(max))
    throw InvalidArgument("AlphaGrid: need 0 <= min < max and step > 0");
}

int AlphaGrid::size() const {
  validate();
  return static_cast<int>(std::floor((max - min) / step + 1e-9)) + 1;
}

double alpha_lower_bound(const Eigen::VectorXd& tdoas, double speed_of_sound) {
  return std::max(0.0, -speed_of_sound * tdoas.minCoeff());
}

Edm build_source_edm(const MicArray& array, double alpha, const Eigen::VectorXd& tdoas, double speed_of_sound) {
  check_inputs(array, tdoas, speed_of_sound);
  const Eigen::VectorXd d = source_distances(alpha, tdoas, speed_of_sound);
  const int m = array.count();
  Eigen::MatrixXd edm = Eigen::MatrixXd::Zero(m + 1, m + 1);
  edm.topLeftCorner(m, m) = array.edm().matrix();
  for (int i = 0; i < m; ++i) edm(i, m) = edm(m, i) = d(i) * d(i);
  return Edm(std::move(edm));
}

Eigen::MatrixXd source_gram(const MicArray& array, double alpha, const Eigen::VectorXd& tdoas, double speed_of_sound) {
  check_inputs(array, tdoas, speed_of_sound);
  return GramBuilder(array, speed_of_sound).gram(alpha, tdoas);
}

double cost_J(const MicArray& array, double alpha, const Eigen::VectorXd& tdoas, double speed_of_sound) {
  return tail_eigen_magnitude(source_gram(array, alpha, tdoas, speed_of_sound), array.dim());
}

std::vector<double> cost_curve(const MicArray& array, const Eigen::VectorXd& tdoas, const AlphaGrid& grid,
                               double speed_of_sound) {
  check_inputs(array, tdoas, speed_of_sound);
  const GramBuilder builder(array, speed_of_sound);
  const double lower = alpha_lower_bound(tdoas, speed_of_sound);
  std::vector<double> out(grid.size(), kInf);
  for (int i = 0; i < grid.size(); ++i)
    if (grid.at(i) >= lower - 1e-12) out[i] = builder.cost(std::max(grid.at(i), lower), tdoas, array.dim());
  return out;
}

AlphaMinimum minimize_alpha(const MicArray& array, const Eigen::VectorXd& tdoas, const AlphaGrid& grid,
                            double speed_of_sound) {
  check_inputs(array, tdoas, speed_of_sound);
  grid.validate();
  return minimize_with(GramBuilder(array, speed_of_sound), array.dim(), tdoas, grid, speed_of_sound);
}

std::vector<CombinationScore> score_combinations(const MicArray& array, const CandidateSet& set, const AlphaGrid& grid,
                                                 double speed_of_sound) {
  set.validate();
  if (set.mic_count != array.count()) throw InvalidArgument("score_combinations: candidate set does not match array");
  grid.validate();
  if (!(speed_of_sound > 0.0)) throw InvalidArgument("score_combinations: speed of sound must be positive");

  const GramBuilder builder(array, speed_of_sound);
  std::vector<CombinationScore> scores;
  scores.reserve(set.combination_count());
  for (const Combination& c : enumerate_combinations(set)) {
    CombinationScore s{c, 0.0, kInf};
    try {
      const AlphaMinimum best = minimize_with(builder, array.dim(), set.raw_tdoas(c), grid, speed_of_sound);
      s.alpha = best.alpha;
      s.cost = best.cost;
    } catch (const InfeasibleCombination&) {
    }
    scores.push_back(std::move(s));
  }
  return scores;
}

bool admissible(const Combination& candidate, const std::vector<Combination>& chosen, int min_diff) {
  for (const Combination& c : chosen) {
    const int differing = static_cast<int>(candidate.size()) - combination_overlap(candidate, c);
    if (differing < min_diff) return false;
  }
  return true;
}

PositionEstimates estimate_positions(const MicArray& array, const CandidateSet& set, int sources, const AlphaGrid& grid,
                                     double speed_of_sound, std::optional<int> min_diff) {
  if (sources < 1) throw InvalidArgument("estimate_positions: need at least one source");
  const int diff = min_diff.value_or(array.count() - 2);

  const std::vector<CombinationScore> scores = score_combinations(array, set, grid, speed_of_sound);
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a].cost < scores[b].cost; });

  const int m = array.count();
  const int dim = array.dim();
  Eigen::VectorXd centering = Eigen::VectorXd::Zero(m + 1);
  centering.head(m).setConstant(1.0 / m);

  PositionEstimates out;
  std::vector<Combination> chosen;
  for (std::size_t idx : order) {
    if (static_cast<int>(out.sources.size()) == sources) break;
    const CombinationScore& s = scores[idx];
    if (!std::isfinite(s.cost)) break;  // sorted: everything after is infeasible too
    if (!admissible(s.combination, chosen, diff)) continue;

    const Eigen::VectorXd tau = set.raw_tdoas(s.combination);
    PositionEstimate est;
    est.gram = eigendecompose_sym(edm_to_gram(build_source_edm(array, s.alpha, tau, speed_of_sound), centering));
    est.gram.cost = s.cost;
    RelativePositions rel;
    try {
      rel = reconstruct_relative_positions(est.gram, dim);
    } catch (const DegenerateGeometry&) {
      continue;  // not realizable in P dimensions: treated like an infeasible combination
    }
    const ProcrustesMap map = procrustes(rel.points.leftCols(m), array.positions());
    est.position = absolute_position_from_relative(rel.points, map) + array.offset();
    est.alpha_hat = s.alpha;
    est.combination = s.combination;
    est.cost_min = s.cost;
    est.degenerate = rel.degenerate;
    chosen.push_back(s.combination);
    out.sources.push_back(std::move(est));
  }
  out.shortfall = static_cast<int>(out.sources.size()) < sources;
  return out;
}

}  // namespace edmloc

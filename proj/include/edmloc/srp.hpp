#pragma once

// SRP-PHAT baseline: steered response power over position or direction
// grids, coarse-to-fine.
//
// The functional for a candidate location x is
//   Psi(x) = mean_l sum_{i>j} sum_k w_k Re( psi_ij[k,l] exp(+j w_k (t_i(x) - t_j(x))) )
// with t_m(x) the propagation time to microphone m. The sum over k covers the
// one-sided bins, weighted 1 at DC/Nyquist and 2 elsewhere, which equals the
// real part of the full K-bin sum.

#include "edmloc/geometry.hpp"
#include "edmloc/signal.hpp"

#include <utility>
#include <vector>

namespace edmloc {

/// PHAT cross spectra for all microphone pairs i > j.
struct PhaseSpectra {
  StftConfig stft;
  int mic_count = 0;
  std::vector<std::pair<int, int>> pairs;  // (i, j), i > j
  Eigen::MatrixXcd mean;                   // bins x pairs, bin-weighted, averaged over frames
  std::vector<Eigen::MatrixXcd> frames;    // per pair, bins x frames, bin-weighted; only when kept

  int pair_count() const { return static_cast<int>(pairs.size()); }
  int frame_count() const { return frames.empty() ? 0 : static_cast<int>(frames.front().cols()); }
};

/// `keep_frames` retains the per-frame spectra for the literal per-frame functional.
PhaseSpectra phase_spectra(const std::vector<Spectrogram>& spectra, const StftConfig& cfg, const Band& band,
                           bool keep_frames = false);

enum class SrpKind { Position, Doa };

struct SrpGrid {
  SrpKind kind = SrpKind::Position;
  double coarse_step = 0.10;  // meters or degrees
  double fine_step = 0.01;
  int fine_half = 10;         // fine grid spans +-fine_half steps per axis
  int beta = 3;               // coarse candidates refined
  double exclusion = 0.5;     // meters or degrees between coarse candidates

  void validate() const;
};

SrpGrid default_position_grid();
SrpGrid default_doa_grid();

struct SrpOptions {
  bool per_frame = false;     // evaluate every frame instead of the frame average (same value, slower)
  int threads = 1;
  bool keep_coarse = false;   // return the coarse grid and its values
};

struct SrpEstimate {
  Eigen::Vector3d location;   // absolute position, or unit direction
  double value = 0.0;
  double azimuth = 0.0;       // radians, DOA only
  double elevation = 0.0;
};

struct SrpResult {
  std::vector<SrpEstimate> sources;
  bool shortfall = false;
  Eigen::Matrix3Xd coarse_points;  // filled when keep_coarse
  Eigen::VectorXd coarse_values;
  int points_evaluated = 0;
};

/// Interior lattice points at multiples of `step`, walls excluded.
Eigen::Matrix3Xd position_coarse_grid(const Eigen::Vector3d& room, double step);
/// (2 half + 1)^3 cube around `center`.
Eigen::Matrix3Xd position_fine_grid(const Eigen::Vector3d& center, double step, int half);
/// Azimuth in (-180, 180], elevation strictly inside (-90, 90), plus both poles. Degrees.
Eigen::Matrix3Xd doa_coarse_grid(double step_deg);
/// (2 half + 1)^2 azimuth/elevation patch around the given angles (radians in, degrees step).
Eigen::Matrix3Xd doa_fine_grid(double azimuth, double elevation, double step_deg, int half);

struct GridCounts {
  long coarse = 0;
  long fine = 0;  // over all beta candidates
};
GridCounts position_grid_counts(const Eigen::Vector3d& room, const SrpGrid& grid);
GridCounts doa_grid_counts(const SrpGrid& grid);

double srp_value_position(const PhaseSpectra& ps, const Eigen::Vector3d& p, const MicArray& array,
                          double speed_of_sound, bool per_frame = false);
double srp_value_doa(const PhaseSpectra& ps, const Eigen::Vector3d& v, const MicArray& array, double speed_of_sound,
                     bool per_frame = false);

/// Coarse search, the beta best mutually separated coarse points, fine search
/// around each, then the S best refined maxima.
SrpResult srp_localize_position(const PhaseSpectra& ps, const MicArray& array, const Eigen::Vector3d& room, int sources,
                                const SrpGrid& grid, double speed_of_sound, const SrpOptions& options = {});
SrpResult srp_localize_doa(const PhaseSpectra& ps, const MicArray& array, int sources, const SrpGrid& grid,
                           double speed_of_sound, const SrpOptions& options = {});

}  // namespace edmloc

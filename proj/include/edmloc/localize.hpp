#pragma once

// End-to-end estimators from multichannel signals.

#include "edmloc/edm_doa.hpp"
#include "edmloc/edm_position.hpp"
#include "edmloc/signal.hpp"
#include "edmloc/srp.hpp"
#include "edmloc/tdoa.hpp"

#include <optional>

namespace edmloc {

struct EdmPipeline {
  StftConfig stft;
  GccConfig gcc;
  int candidates = 3;
  ReferenceMode reference = ReferenceMode::Distributed;
  AlphaGrid alpha;
  double speed_of_sound = kDefaultSpeedOfSound;
  std::optional<int> min_diff;
};

/// gamma 30, C = 3, reference nearest the centroid.
EdmPipeline default_position_pipeline();
/// gamma 50, C = 2, reference with the largest mean spacing.
EdmPipeline default_doa_pipeline();

struct SrpPipeline {
  StftConfig stft;
  Band band;
  SrpGrid grid;
  SrpOptions options;
  double speed_of_sound = kDefaultSpeedOfSound;
};

SrpPipeline default_srp_position_pipeline();
SrpPipeline default_srp_doa_pipeline();

/// Spectra, candidate TDOAs and the reference actually used.
CandidateExtraction edm_candidates(const Channels& channels, const MicArray& array, const EdmPipeline& cfg);

PositionEstimates edm_localize_position(const Channels& channels, const MicArray& array, int sources,
                                        const EdmPipeline& cfg);
DoaEstimates edm_localize_doa(const Channels& channels, const MicArray& array, int sources, const EdmPipeline& cfg);

SrpResult srp_localize_position(const Channels& channels, const MicArray& array, const Eigen::Vector3d& room,
                                int sources, const SrpPipeline& cfg);
SrpResult srp_localize_doa(const Channels& channels, const MicArray& array, int sources, const SrpPipeline& cfg);

}  // namespace edmloc

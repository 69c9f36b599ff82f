#include "edmloc/localize.hpp"

#include "edmloc/errors.hpp"

namespace edmloc {

namespace {

void check_channels(const Channels& channels, const MicArray& array) {
  if (static_cast<int>(channels.size()) != array.count())
    throw InvalidArgument("localize: one channel per microphone required");
}

}  // namespace

EdmPipeline default_position_pipeline() {
  EdmPipeline p;
  p.gcc.gamma = 30.0;
  p.candidates = 3;
  p.reference = ReferenceMode::Distributed;
  return p;
}

EdmPipeline default_doa_pipeline() {
  EdmPipeline p;
  p.gcc.gamma = 50.0;
  p.candidates = 2;
  p.reference = ReferenceMode::Compact;
  return p;
}

SrpPipeline default_srp_position_pipeline() {
  SrpPipeline p;
  p.grid = default_position_grid();
  return p;
}

SrpPipeline default_srp_doa_pipeline() {
  SrpPipeline p;
  p.grid = default_doa_grid();
  return p;
}

CandidateExtraction edm_candidates(const Channels& channels, const MicArray& array, const EdmPipeline& cfg) {
  check_channels(channels, array);
  const std::vector<Spectrogram> spectra = stft_channels(channels, cfg.stft);
  const int reference = select_reference_mic(array, cfg.reference);
  return extract_candidates(spectra, array, reference, cfg.stft, cfg.gcc, cfg.candidates, cfg.speed_of_sound);
}

PositionEstimates edm_localize_position(const Channels& channels, const MicArray& array, int sources,
                                        const EdmPipeline& cfg) {
  const CandidateExtraction cand = edm_candidates(channels, array, cfg);
  return estimate_positions(array, cand.set, sources, cfg.alpha, cfg.speed_of_sound, cfg.min_diff);
}

DoaEstimates edm_localize_doa(const Channels& channels, const MicArray& array, int sources, const EdmPipeline& cfg) {
  const CandidateExtraction cand = edm_candidates(channels, array, cfg);
  return estimate_doas(array, cand.set, sources, cfg.speed_of_sound, cfg.min_diff);
}

SrpResult srp_localize_position(const Channels& channels, const MicArray& array, const Eigen::Vector3d& room,
                                int sources, const SrpPipeline& cfg) {
  check_channels(channels, array);
  const PhaseSpectra ps = phase_spectra(stft_channels(channels, cfg.stft), cfg.stft, cfg.band, cfg.options.per_frame);
  return srp_localize_position(ps, array, room, sources, cfg.grid, cfg.speed_of_sound, cfg.options);
}

SrpResult srp_localize_doa(const Channels& channels, const MicArray& array, int sources, const SrpPipeline& cfg) {
  check_channels(channels, array);
  const PhaseSpectra ps = phase_spectra(stft_channels(channels, cfg.stft), cfg.stft, cfg.band, cfg.options.per_frame);
  return srp_localize_doa(ps, array, sources, cfg.grid, cfg.speed_of_sound, cfg.options);
}

}  // namespace edmloc

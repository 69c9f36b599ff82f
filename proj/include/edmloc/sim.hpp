#pragma once

// Deterministic scenario sampling and multichannel rendering.
//
// Geometry: a random microphone cloud inside a cube centered in a shoebox
// room, sources at prescribed distances from the array centroid.
// Rendering: fractional-delay direct path with 1/d gain, optional low-order
// image sources with one frequency-independent reflection coefficient, and
// independent pink noise per channel at a target SNR.

#include "edmloc/geometry.hpp"
#include "edmloc/signal.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace edmloc {

enum class ArrayMode { Distributed, Compact };

const char* to_string(ArrayMode mode);
ArrayMode array_mode_from_string(const std::string& s);

inline constexpr int kScenarioSchemaVersion = 1;

struct ScenarioConfig {
  int schema_version = kScenarioSchemaVersion;
  ArrayMode mode = ArrayMode::Distributed;
  Eigen::Vector3d room{6.0, 6.0, 2.4};
  int mic_count = 6;
  std::vector<double> source_distances{2.0, 2.0};  // d_c per source, meters from the array centroid
  double snr_db = 20.0;                            // +inf disables noise
  int reflection_order = 1;
  double reflection_coeff = 0.5;
  double sample_rate = 16000.0;
  double duration = 5.0;
  double speed_of_sound = 343.0;
  double wall_margin = 0.1;
  double min_source_distance = 1.0;    // between sources
  double min_source_angle_deg = 20.0;  // seen from the array centroid

  /// Cube side and minimum microphone spacing for the array mode.
  double array_cube() const { return mode == ArrayMode::Distributed ? 2.0 : 0.10; }
  double min_mic_spacing() const { return mode == ArrayMode::Distributed ? 0.10 : 0.04; }
  int samples() const;
  void validate() const;
};

struct Scenario {
  ScenarioConfig config;
  std::uint64_t seed = 0;
  MicArray array;              // centered, offset = absolute centroid
  Eigen::Matrix3Xd sources;    // absolute positions
};

/// Rejection sampling, at most 10,000 attempts; throws InfeasibleConfig.
Scenario sample_scenario(const ScenarioConfig& cfg, std::uint64_t seed);

/// Pink noise with a 4 Hz syllabic envelope, unit RMS.
std::vector<double> speech_like_source(std::uint64_t seed, double duration, double sample_rate);

/// 64-tap Kaiser-windowed sinc for a fractional delay in [0, 1). Tap t
/// multiplies x[n - floor(delay) - (t - 31)].
std::vector<double> fractional_delay_kernel(double frac);

/// Room impulse response from a source to a point, direct path plus images up
/// to the configured order. Index 0 corresponds to a lag of -kRirLead samples.
inline constexpr int kRirLead = 32;
std::vector<double> room_impulse_response(const ScenarioConfig& cfg, const Eigen::Vector3d& source,
                                          const Eigen::Vector3d& mic);

/// Reverberant source images at every microphone (no noise).
Channels render_clean(const Scenario& scenario, const std::vector<std::vector<double>>& source_signals);

/// Adds independent pink noise per channel so that the mic-averaged signal
/// power over noise power equals snr_db.
void add_noise(Channels& channels, double snr_db, std::uint64_t seed);

/// render_clean + add_noise with the scenario SNR.
Channels synthesize(const Scenario& scenario, const std::vector<std::vector<double>>& source_signals);

/// Speech-like sources for every source of the scenario, seeded from the scenario seed.
std::vector<std::vector<double>> scenario_sources(const Scenario& scenario);

struct TruthOracle {
  int reference = 0;
  std::vector<Eigen::VectorXd> near_field;  // per source: t_m - t_ref, seconds
  std::vector<Eigen::VectorXd> far_field;   // per source: centered plane-wave delays -m_m^T v / nu
  std::vector<Eigen::Vector3d> directions;  // unit vectors from the array centroid
};

/// Arrival time at each microphone minus that at `reference`.
Eigen::VectorXd near_field_tdoas(const MicArray& array, const Eigen::VectorXd& source, int reference,
                                 double speed_of_sound);
/// Centered plane-wave arrival delays for unit direction v.
Eigen::VectorXd far_field_tdoas(const MicArray& array, const Eigen::VectorXd& direction, double speed_of_sound);

TruthOracle truth_tdoas(const Scenario& scenario, int reference = 0);

/// JSON round trip for configs and scenario sidecars.
std::string config_to_json(const ScenarioConfig& cfg);
ScenarioConfig config_from_json(const std::string& text);
std::string scenario_to_json(const Scenario& scenario, const TruthOracle& truth);
Scenario scenario_from_json(const std::string& text);

}  // namespace edmloc

#pragma once

// STFT front end and GCC-PHAT.

#include <Eigen/Dense>

#include <limits>
#include <span>
#include <vector>

namespace edmloc {

/// One sample vector per microphone.
using Channels = std::vector<std::vector<double>>;

/// Frequency bins x frames, bins 0..K/2.
using Spectrogram = Eigen::MatrixXcd;

struct StftConfig {
  int frame_len = 512;  // K, power of two
  int hop = 256;        // K/2
  double sample_rate = 16000.0;

  int bins() const { return frame_len / 2 + 1; }
  /// Throws InvalidArgument unless hop == K/2, K is a power of two and f_s > 0.
  void validate() const;
};

/// Frequencies outside [low_hz, high_hz] are excluded from GCC and SRP sums.
struct Band {
  double low_hz = 0.0;
  double high_hz = std::numeric_limits<double>::infinity();

  bool contains(double f) const { return f >= low_hz && f <= high_hz; }
};

struct GccConfig {
  int interp_factor = 20;  // R
  double gamma = 30.0;     // 0 disables the exponential weighting
  Band band;
};

/// Frame-averaged, weighted GCC-PHAT over the plausible lags of one pair.
/// Lags are integers at the interpolated rate R * f_s; values(i) belongs to
/// lag i - max_lag. A positive lag means the signal at `mic` arrives later
/// than at `reference`.
struct GccCurve {
  Eigen::VectorXd values;
  int max_lag = 0;
  double lag_rate = 0.0;  // lags per second
  int mic = -1;
  int reference = -1;

  int size() const { return static_cast<int>(values.size()); }
  int lag_of(int index) const { return index - max_lag; }
  double seconds(double lag) const { return lag / lag_rate; }
};

/// Square-root periodic Hann window of length n.
std::vector<double> sqrt_hann(int n);

/// Frames of K samples with hop K/2; a partial trailing frame is dropped.
Spectrogram stft(std::span<const double> signal, const StftConfig& cfg);
std::vector<Spectrogram> stft_channels(const Channels& channels, const StftConfig& cfg);

/// Y_i Y_j^* / |Y_i Y_j^*|, with 0 wherever the magnitude is below 1e-12.
Eigen::VectorXcd phase_spectrum(const Eigen::VectorXcd& yi, const Eigen::VectorXcd& yj);

/// 1 for bins inside the band, 0 outside.
Eigen::VectorXd band_mask(const StftConfig& cfg, const Band& band);

/// Plausible lag bound: the largest integer n with |n| < R f_s D / nu.
int plausible_max_lag(double pair_distance, double speed_of_sound, double sample_rate, int interp_factor);

GccCurve gcc_phat(const Spectrogram& spec_mic, const Spectrogram& spec_ref, const StftConfig& cfg,
                  double pair_distance, double speed_of_sound, const GccConfig& gcc);

}  // namespace edmloc

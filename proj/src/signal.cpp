#include "edmloc/signal.hpp"

#include "edmloc/errors.hpp"
#include "fft.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

namespace edmloc {

void StftConfig::validate() const {
  if (frame_len < 2 || (frame_len & (frame_len - 1)) != 0)
    throw InvalidArgument("StftConfig: frame length must be a power of two");
  if (hop != frame_len / 2) throw InvalidArgument("StftConfig: hop must be half the frame length");
  if (!(sample_rate > 0.0) || !std::isfinite(sample_rate)) throw InvalidArgument("StftConfig: sample rate must be positive");
}

std::vector<double> sqrt_hann(int n) {
  std::vector<double> w(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) w[i] = std::sqrt(0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / n));
  return w;
}

Spectrogram stft(std::span<const double> signal, const StftConfig& cfg) {
  cfg.validate();
  const int k = cfg.frame_len;
  if (static_cast<int>(signal.size()) < k) throw InvalidArgument("stft: signal shorter than one frame");

  const int frames = static_cast<int>((signal.size() - k) / cfg.hop) + 1;
  const std::vector<double> window = sqrt_hann(k);
  detail::RealForwardFft fft(k);

  Spectrogram out(cfg.bins(), frames);
  std::vector<double> frame(k);
  for (int l = 0; l < frames; ++l) {
    const double* src = signal.data() + static_cast<std::size_t>(l) * cfg.hop;
    for (int n = 0; n < k; ++n) frame[n] = src[n] * window[n];
    fft(frame.data(), out.col(l).data());
  }
  return out;
}

std::vector<Spectrogram> stft_channels(const Channels& channels, const StftConfig& cfg) {
  std::vector<Spectrogram> out;
  out.reserve(channels.size());
  for (const auto& ch : channels) out.push_back(stft(ch, cfg));
  return out;
}

Eigen::VectorXcd phase_spectrum(const Eigen::VectorXcd& yi, const Eigen::VectorXcd& yj) {
  if (yi.size() != yj.size()) throw InvalidArgument("phase_spectrum: length mismatch");
  Eigen::VectorXcd psi(yi.size());
  for (Eigen::Index k = 0; k < yi.size(); ++k) {
    const std::complex<double> cross = yi(k) * std::conj(yj(k));
    const double mag = std::abs(cross);
    psi(k) = mag < 1e-12 ? std::complex<double>{} : cross / mag;
  }
  return psi;
}

Eigen::VectorXd band_mask(const StftConfig& cfg, const Band& band) {
  Eigen::VectorXd mask(cfg.bins());
  for (int k = 0; k < cfg.bins(); ++k) mask(k) = band.contains(k * cfg.sample_rate / cfg.frame_len) ? 1.0 : 0.0;
  return mask;
}

int plausible_max_lag(double pair_distance, double speed_of_sound, double sample_rate, int interp_factor) {
  const double bound = interp_factor * sample_rate * pair_distance / speed_of_sound;
  return std::max(0, static_cast<int>(std::ceil(bound)) - 1);
}

GccCurve gcc_phat(const Spectrogram& spec_mic, const Spectrogram& spec_ref, const StftConfig& cfg,
                  double pair_distance, double speed_of_sound, const GccConfig& gcc) {
  cfg.validate();
  if (!(pair_distance > 0.0)) throw InvalidArgument("gcc_phat: pair distance must be positive");
  if (!(speed_of_sound > 0.0)) throw InvalidArgument("gcc_phat: speed of sound must be positive");
  if (gcc.interp_factor < 1) throw InvalidArgument("gcc_phat: interpolation factor must be >= 1");
  if (!(gcc.gamma >= 0.0)) throw InvalidArgument("gcc_phat: gamma must be non-negative");
  if (spec_mic.rows() != cfg.bins() || spec_ref.rows() != cfg.bins() || spec_mic.cols() != spec_ref.cols())
    throw InvalidArgument("gcc_phat: spectrogram shape mismatch");
  if (spec_mic.cols() == 0) throw InvalidArgument("gcc_phat: no frames");

  const int k = cfg.frame_len;
  const int half = k / 2;
  const int r = gcc.interp_factor;
  const int padded = r * k;

  GccCurve curve;
  curve.max_lag = plausible_max_lag(pair_distance, speed_of_sound, cfg.sample_rate, r);
  curve.lag_rate = r * cfg.sample_rate;
  curve.values = Eigen::VectorXd::Zero(2 * curve.max_lag + 1);

  const Eigen::VectorXd mask = band_mask(cfg, gcc.band);
  detail::RealInverseFft ifft(padded);
  std::vector<std::complex<double>> spectrum(padded / 2 + 1);
  std::vector<double> lagged(padded);

  const Eigen::Index frames = spec_mic.cols();
  for (Eigen::Index l = 0; l < frames; ++l) {
    std::fill(spectrum.begin(), spectrum.end(), std::complex<double>{});
    const Eigen::VectorXcd psi = phase_spectrum(spec_mic.col(l), spec_ref.col(l));
    for (int b = 0; b <= half; ++b) spectrum[b] = mask(b) * psi(b);
    // zero padding splits the original Nyquist bin between +K/2 and -K/2
    if (r > 1) spectrum[half] *= 0.5;
    ifft(spectrum.data(), lagged.data());

    for (int i = 0; i < curve.size(); ++i) {
      const int lag = curve.lag_of(i);
      const double xi = lagged[(lag + padded) % padded] / k;
      curve.values(i) += gcc.gamma > 0.0 ? std::exp(gcc.gamma * xi) : xi;
    }
  }
  curve.values /= static_cast<double>(frames);
  return curve;
}

}  // namespace edmloc

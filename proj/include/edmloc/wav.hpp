#pragma once

// Minimal RIFF/WAVE reader and writer for multichannel audio.

#include "edmloc/signal.hpp"

#include <string>

namespace edmloc {

struct WavData {
  Channels channels;
  double sample_rate = 0.0;
};

enum class WavFormat { Pcm16, Float32 };

/// Reads PCM 16/24/32-bit integer or 32/64-bit float files into [-1, 1] samples.
WavData read_wav(const std::string& path);
void write_wav(const std::string& path, const Channels& channels, double sample_rate, WavFormat format = WavFormat::Float32);

}  // namespace edmloc

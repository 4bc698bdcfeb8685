#pragma once

#include <filesystem>

#include "hpss/core.hpp"
#include "hpss/signal.hpp"

namespace hpss {

/// Decoded WAV payload, frames x channels.
struct WavData {
  Mat<double> samples;
  int sample_rate = 0;
};

enum class WavFormat { Float32, Pcm16 };

/// Reads PCM 16/24-bit or IEEE float32 WAV files (WAVE_FORMAT_EXTENSIBLE
/// accepted for the same codecs). Integer samples are scaled to [-1, 1).
WavData read_wav(const std::filesystem::path& path);

/// Averages channels into a mono waveform.
Waveformd to_mono(const WavData& data);

void write_wav(const std::filesystem::path& path, const Mat<double>& frames_by_channels,
               int sample_rate, WavFormat format = WavFormat::Float32);

inline void write_wav(const std::filesystem::path& path, const Waveformd& wav,
                      WavFormat format = WavFormat::Float32) {
  write_wav(path, wav.samples, wav.sample_rate, format);
}

}  // namespace hpss

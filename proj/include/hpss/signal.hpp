#pragma once

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <vector>

#include "hpss/core.hpp"

namespace hpss {

/// Mono time-domain signal.
template <typename Scalar>
struct Waveform {
  Vec<Scalar> samples;
  int sample_rate = 0;
};

using Waveformd = Waveform<double>;

enum class WindowKind { Hamming, Hann, Rectangular };

/// Analysis parameters shared by a spectrogram and its inverse transform.
struct StftConfig {
  int window_length = 0;
  int hop_length = 0;
  int fft_length = 0;
  WindowKind window_kind = WindowKind::Hamming;
  bool center_pad = true;
};

enum class Setting { Setting1, Setting2 };

template <typename Scalar>
struct ComplexSpectrogram {
  CMat<Scalar> bins;  // F x T, one column per frame
  StftConfig config;
  int sample_rate = 0;

  Index num_bins() const { return bins.rows(); }
  Index num_frames() const { return bins.cols(); }
};

template <typename Scalar>
struct MagSpectrogram {
  Mat<Scalar> bins;  // F x T, nonnegative
  StftConfig config;
  int sample_rate = 0;

  Index num_bins() const { return bins.rows(); }
  Index num_frames() const { return bins.cols(); }
};

using ComplexSpectrogramd = ComplexSpectrogram<double>;
using MagSpectrogramd = MagSpectrogram<double>;

inline void validate(const StftConfig& cfg) {
  if (cfg.hop_length <= 0 || cfg.hop_length > cfg.window_length ||
      cfg.window_length > cfg.fft_length) {
    throw std::invalid_argument("StftConfig: need 0 < hop <= window <= fft");
  }
  if (!is_pow2(cfg.fft_length)) {
    throw std::invalid_argument("StftConfig: fft_length must be a power of two");
  }
}

template <typename Scalar>
void validate(const Waveform<Scalar>& x) {
  if (x.sample_rate <= 0) throw std::invalid_argument("Waveform: sample_rate must be positive");
  if (!x.samples.allFinite()) throw std::invalid_argument("Waveform: non-finite samples");
}

/// Periodic (DFT-even) windows.
template <typename Scalar>
Vec<Scalar> make_window(WindowKind kind, int length) {
  Vec<Scalar> w(length);
  switch (kind) {
    case WindowKind::Hamming:
      for (int i = 0; i < length; ++i)
        w(i) = Scalar(0.54) - Scalar(0.46) * std::cos(two_pi_v<Scalar> * Scalar(i) / Scalar(length));
      break;
    case WindowKind::Hann:
      for (int i = 0; i < length; ++i)
        w(i) = Scalar(0.5) * (Scalar(1) - std::cos(two_pi_v<Scalar> * Scalar(i) / Scalar(length)));
      break;
    case WindowKind::Rectangular:
      w.setOnes();
      break;
  }
  return w;
}

/// Builds the STFT configuration for one of the paper-style settings.
///
/// Window lengths start from the nearest even sample count to the nominal
/// duration (46 ms / 92 ms) and snap up to the next power of two when within
/// 1% of it: the millisecond durations are themselves integer roundings of
/// power-of-two lengths at 44.1 kHz (2048 and 4096 samples). Setting 1 pads
/// the FFT by a factor of two; Setting 2 uses the smallest power of two that
/// holds the window (no padding at 44.1 kHz).
inline StftConfig make_setting(Setting id, int sample_rate) {
  if (sample_rate <= 0) throw std::invalid_argument("make_setting: sample_rate must be positive");
  const double window_s = id == Setting::Setting1 ? 0.046 : 0.092;
  const double hop_s = id == Setting::Setting1 ? 0.009 : 0.023;

  int window = 2 * static_cast<int>(std::llround(window_s * sample_rate / 2.0));
  window = std::max(window, 2);
  const int pow2 = next_pow2(window);
  if (pow2 - window <= 0.01 * window) window = pow2;

  StftConfig cfg;
  cfg.window_length = window;
  cfg.fft_length = id == Setting::Setting1 ? 2 * next_pow2(window) : next_pow2(window);
  cfg.hop_length = std::max(1, static_cast<int>(std::llround(hop_s * sample_rate)));
  cfg.window_kind = WindowKind::Hamming;
  cfg.center_pad = true;
  validate(cfg);
  return cfg;
}

/// Desk-scale analysis config: 256-point FFT (129 bins), 32 ms window and
/// 8 ms hop at 8 kHz. Matches the toy MaD TwinNet default bin count.
inline StftConfig make_toy_config() {
  StftConfig cfg;
  cfg.window_length = 256;
  cfg.hop_length = 64;
  cfg.fft_length = 256;
  cfg.window_kind = WindowKind::Hamming;
  cfg.center_pad = true;
  return cfg;
}

/// One-sided STFT. Frame t covers padded samples [t*hop, t*hop + window);
/// the window is applied before zero-padding to fft_length. With center_pad,
/// the signal is reflect-padded by window/2 on both sides.
template <typename Scalar>
ComplexSpectrogram<Scalar> stft(const Waveform<Scalar>& x, const StftConfig& cfg) {
  validate(cfg);
  validate(x);
  const Index n = x.samples.size();
  if (n == 0) throw std::invalid_argument("stft: empty input");

  const Index window = cfg.window_length;
  const Index hop = cfg.hop_length;
  const Index nfft = cfg.fft_length;
  const Index pad = cfg.center_pad ? window / 2 : 0;
  const Index padded = n + 2 * pad;
  if (padded < window) {
    throw std::invalid_argument("stft: input shorter than one window (center_pad is off)");
  }
  const Index frames = (padded - window) / hop + 1;
  const Index bins = nfft / 2 + 1;

  const Vec<Scalar> win = make_window<Scalar>(cfg.window_kind, static_cast<int>(window));

  ComplexSpectrogram<Scalar> out;
  out.bins.resize(bins, frames);
  out.config = cfg;
  out.sample_rate = x.sample_rate;

  Eigen::FFT<Scalar> fft;
  fft.SetFlag(Eigen::FFT<Scalar>::HalfSpectrum);
  std::vector<Scalar> frame(static_cast<size_t>(nfft), Scalar(0));
  std::vector<std::complex<Scalar>> spectrum;

  for (Index t = 0; t < frames; ++t) {
    const Index start = t * hop - pad;
    for (Index i = 0; i < window; ++i) {
      Index s = start + i;
      if (s < 0 || s >= n) s = reflect_index(s, n);
      frame[static_cast<size_t>(i)] = win(i) * x.samples(s);
    }
    std::fill(frame.begin() + window, frame.end(), Scalar(0));
    fft.fwd(spectrum, frame);
    for (Index f = 0; f < bins; ++f) out.bins(f, t) = spectrum[static_cast<size_t>(f)];
  }
  return out;
}

/// Least-squares overlap-add synthesis: frames are inverse-transformed,
/// re-windowed, summed, and divided by the accumulated squared window.
/// `length_hint` trims or zero-pads the result to a known signal length;
/// by default the output covers the analysis span minus any center padding.
template <typename Scalar>
Waveform<Scalar> istft(const ComplexSpectrogram<Scalar>& spec, Index length_hint = -1) {
  validate(spec.config);
  if (spec.sample_rate <= 0) throw std::invalid_argument("istft: sample_rate must be positive");
  const Index window = spec.config.window_length;
  const Index hop = spec.config.hop_length;
  const Index nfft = spec.config.fft_length;
  if (spec.num_bins() != nfft / 2 + 1) {
    throw std::invalid_argument("istft: bin count does not match fft_length/2 + 1");
  }
  if (!spec.bins.allFinite()) throw std::invalid_argument("istft: non-finite spectrogram");
  const Index frames = spec.num_frames();
  if (frames == 0) throw std::invalid_argument("istft: empty spectrogram");

  const Index covered = (frames - 1) * hop + window;
  const Vec<Scalar> win = make_window<Scalar>(spec.config.window_kind, static_cast<int>(window));

  Vec<Scalar> acc = Vec<Scalar>::Zero(covered);
  Vec<Scalar> win_power = Vec<Scalar>::Zero(covered);

  Eigen::FFT<Scalar> fft;
  fft.SetFlag(Eigen::FFT<Scalar>::HalfSpectrum);
  std::vector<std::complex<Scalar>> spectrum(static_cast<size_t>(spec.num_bins()));
  std::vector<Scalar> frame;

  for (Index t = 0; t < frames; ++t) {
    for (Index f = 0; f < spec.num_bins(); ++f) spectrum[static_cast<size_t>(f)] = spec.bins(f, t);
    fft.inv(frame, spectrum, static_cast<int>(nfft));
    const Index at = t * hop;
    for (Index i = 0; i < window; ++i) {
      acc(at + i) += win(i) * frame[static_cast<size_t>(i)];
      win_power(at + i) += win(i) * win(i);
    }
  }

  const Scalar peak = win_power.maxCoeff();
  if (win_power.minCoeff() < Scalar(1e-12) * std::max(peak, Scalar(1))) {
    throw NumericError("istft: accumulated window power vanishes; synthesis is degenerate");
  }
  acc.array() /= win_power.array();

  const Index pad = spec.config.center_pad ? window / 2 : 0;
  const Index available = covered - pad;
  const Index length = length_hint >= 0 ? length_hint : covered - 2 * pad;

  Waveform<Scalar> out;
  out.sample_rate = spec.sample_rate;
  out.samples = Vec<Scalar>::Zero(length);
  const Index copy = std::min(length, available);
  for (Index i = 0; i < copy; ++i) out.samples(i) = acc(pad + i);
  return out;
}

template <typename Scalar>
MagSpectrogram<Scalar> magnitude(const ComplexSpectrogram<Scalar>& spec) {
  MagSpectrogram<Scalar> out;
  out.bins = spec.bins.cwiseAbs();
  out.config = spec.config;
  out.sample_rate = spec.sample_rate;
  return out;
}

/// Elementwise complex argument in (-pi, pi]; the phase of a zero entry is 0.
template <typename Scalar>
Mat<Scalar> phase(const ComplexSpectrogram<Scalar>& spec) {
  return spec.bins.unaryExpr([](const std::complex<Scalar>& z) { return arg_convention(z); });
}

template <typename Scalar>
ComplexSpectrogram<Scalar> polar(const MagSpectrogram<Scalar>& mag, const Mat<Scalar>& phi) {
  if (mag.bins.rows() != phi.rows() || mag.bins.cols() != phi.cols()) {
    throw std::invalid_argument("polar: magnitude/phase shape mismatch");
  }
  if (!mag.bins.allFinite() || (mag.bins.array() < Scalar(0)).any()) {
    throw std::invalid_argument("polar: magnitudes must be finite and nonnegative");
  }
  if (!phi.allFinite()) throw std::invalid_argument("polar: non-finite phases");
  ComplexSpectrogram<Scalar> out;
  out.config = mag.config;
  out.sample_rate = mag.sample_rate;
  out.bins = mag.bins.binaryExpr(phi, [](Scalar v, Scalar p) {
    return std::complex<Scalar>(v * std::cos(p), v * std::sin(p));
  });
  return out;
}

}  // namespace hpss

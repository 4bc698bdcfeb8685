#pragma once

#include <sstream>

#include "hpss/track.hpp"

namespace hpss {

/// Desk-scale synthetic mixture: Poisson-timed noise bursts with exponential
/// decay stand in for drums, and a handful of slowly vibrating sinusoids with
/// piecewise-constant amplitudes stand in for the pitched instruments.
struct SynthSpec {
  double duration_s = 10.0;
  int sample_rate = 8000;

  double burst_rate_hz = 2.0;    // Poisson event rate; 0 silences the percussive track
  double burst_decay_s = 0.05;   // exponential decay time constant
  int min_partials = 3;
  int max_partials = 8;
  double freq_min_hz = 100.0;
  double freq_max_hz = 3000.0;
  double vibrato_rate_hz = 3.0;
  double vibrato_depth = 0.002;  // relative frequency deviation
  double amp_segment_s = 0.8;    // piecewise-constant amplitude segment length
  double rms_ratio = 1.0;        // percussive RMS / harmonic RMS
  double peak_level = 0.7;       // mixture peak after normalization
};

inline void validate(const SynthSpec& s) {
  if (!(s.duration_s > 0) || s.sample_rate <= 0) {
    throw std::invalid_argument("SynthSpec: need positive duration and sample rate");
  }
  if (s.burst_rate_hz < 0 || !(s.burst_decay_s > 0)) {
    throw std::invalid_argument("SynthSpec: bad burst parameters");
  }
  if (s.min_partials < 1 || s.max_partials < s.min_partials) {
    throw std::invalid_argument("SynthSpec: bad partial counts");
  }
  if (!(s.freq_min_hz > 0) || s.freq_max_hz <= s.freq_min_hz ||
      s.freq_max_hz >= 0.5 * s.sample_rate) {
    throw std::invalid_argument("SynthSpec: partial frequencies must lie below Nyquist");
  }
  if (!(s.amp_segment_s > 0) || s.rms_ratio < 0 || !(s.peak_level > 0)) {
    throw std::invalid_argument("SynthSpec: bad level parameters");
  }
}

/// Deterministic given (spec, seed). mixture == percussive + harmonic exactly.
inline TrackBundle synth_track(const SynthSpec& spec, std::uint64_t seed) {
  validate(spec);
  const Index n = static_cast<Index>(std::llround(spec.duration_s * spec.sample_rate));
  const double fs = spec.sample_rate;
  Rng rng(seed);

  Vec<double> percussive = Vec<double>::Zero(n);
  if (spec.burst_rate_hz > 0) {
    const Index burst_len =
        std::max<Index>(1, static_cast<Index>(std::llround(6.0 * spec.burst_decay_s * fs)));
    double t = rng.exponential(spec.burst_rate_hz);
    while (t < spec.duration_s) {
      const Index at = static_cast<Index>(t * fs);
      const double amp = rng.uniform(0.5, 1.0);
      for (Index i = 0; i < burst_len && at + i < n; ++i) {
        const double env = std::exp(-static_cast<double>(i) / (spec.burst_decay_s * fs));
        percussive(at + i) += amp * env * rng.normal();
      }
      t += rng.exponential(spec.burst_rate_hz);
    }
  }

  Vec<double> harmonic = Vec<double>::Zero(n);
  const int partials =
      static_cast<int>(rng.uniform_int(spec.min_partials, spec.max_partials));
  const Index seg_len = std::max<Index>(1, static_cast<Index>(std::llround(spec.amp_segment_s * fs)));
  for (int p = 0; p < partials; ++p) {
    const double freq = rng.uniform(spec.freq_min_hz, spec.freq_max_hz);
    const double vib_phase = rng.uniform(0.0, two_pi_v<double>);
    double phi = rng.uniform(0.0, two_pi_v<double>);
    const Index segments = (n + seg_len - 1) / seg_len;
    Vec<double> levels(segments);
    for (Index s = 0; s < segments; ++s) levels(s) = rng.uniform(0.3, 1.0);
    for (Index i = 0; i < n; ++i) {
      const double ti = static_cast<double>(i) / fs;
      const double inst_freq =
          freq * (1.0 + spec.vibrato_depth * std::sin(two_pi_v<double> * spec.vibrato_rate_hz * ti + vib_phase));
      harmonic(i) += levels(i / seg_len) * std::sin(phi);
      phi += two_pi_v<double> * inst_freq / fs;
    }
  }

  // RMS balance then peak normalization; both sources share every scale
  // factor so the mixture stays an exact sum.
  const double harm_rms = std::sqrt(harmonic.squaredNorm() / static_cast<double>(n));
  if (harm_rms > 0) harmonic *= 0.1 / harm_rms;
  const double perc_rms = std::sqrt(percussive.squaredNorm() / static_cast<double>(n));
  const double target_perc_rms = spec.rms_ratio * 0.1;
  if (perc_rms > 0) percussive *= target_perc_rms / perc_rms;

  Vec<double> mixture = percussive + harmonic;
  const double peak = mixture.cwiseAbs().maxCoeff();
  if (peak > 0) {
    const double scale = spec.peak_level / peak;
    percussive *= scale;
    harmonic *= scale;
    mixture = percussive + harmonic;
  }

  TrackBundle bundle;
  bundle.mixture = {mixture, spec.sample_rate};
  bundle.percussive_ref = {percussive, spec.sample_rate};
  bundle.harmonic_ref = {harmonic, spec.sample_rate};
  std::ostringstream id;
  id << "synth_" << seed;
  bundle.track_id = id.str();
  validate(bundle);
  return bundle;
}

}  // namespace hpss

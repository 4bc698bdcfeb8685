#pragma once

#include <vector>

#include "hpss/signal.hpp"

namespace hpss {

/// Wiener-style gain pair; g1 + g2 == 1 wherever the magnitudes carry energy
/// and 0.5 each where both are zero.
template <typename Scalar>
struct GainField {
  Mat<Scalar> g1, g2;
};

/// Per-bin normalized frequencies in cycles/sample, range [0, 0.5].
template <typename Scalar>
struct FrequencyField {
  Mat<Scalar> nu;
};

enum class PeakAssign { NearestPeak, LobeSplit };

struct PuHpssConfig {
  int max_iter = 50;
  int peak_neighborhood = 2;  // strict local-max test radius, in bins
  PeakAssign assign_rule = PeakAssign::NearestPeak;
};

inline void validate(const PuHpssConfig& cfg) {
  if (cfg.max_iter < 0) throw std::invalid_argument("PuHpssConfig: max_iter must be >= 0");
  if (cfg.peak_neighborhood < 1) throw std::invalid_argument("PuHpssConfig: peak_neighborhood must be >= 1");
}

template <typename Scalar>
struct SourcePair {
  ComplexSpectrogram<Scalar> percussive;  // S1_hat
  ComplexSpectrogram<Scalar> harmonic;    // S2_hat
};

/// Mixture-phase baseline: S_j = V_j . exp(i * angle(X)).
template <typename Scalar>
SourcePair<Scalar> mixture_phase_reconstruct(const MagSpectrogram<Scalar>& v1,
                                             const MagSpectrogram<Scalar>& v2,
                                             const ComplexSpectrogram<Scalar>& x) {
  if (v1.bins.rows() != x.bins.rows() || v1.bins.cols() != x.bins.cols() ||
      v2.bins.rows() != x.bins.rows() || v2.bins.cols() != x.bins.cols()) {
    throw std::invalid_argument("mixture_phase_reconstruct: shape mismatch");
  }
  const Mat<Scalar> phi = phase(x);
  SourcePair<Scalar> out;
  out.percussive = polar(v1, phi);
  out.harmonic = polar(v2, phi);
  return out;
}

/// G_j = V_j^2 / (V1^2 + V2^2), with 0/0 resolved as an even 0.5 split.
template <typename Scalar>
GainField<Scalar> wiener_gains(const MagSpectrogram<Scalar>& v1, const MagSpectrogram<Scalar>& v2) {
  if (v1.bins.rows() != v2.bins.rows() || v1.bins.cols() != v2.bins.cols()) {
    throw std::invalid_argument("wiener_gains: shape mismatch");
  }
  GainField<Scalar> g;
  g.g1 = v1.bins.binaryExpr(v2.bins, [](Scalar a, Scalar b) {
    const Scalar a2 = a * a, b2 = b * b;
    const Scalar denom = a2 + b2;
    return denom > Scalar(0) ? a2 / denom : Scalar(0.5);
  });
  g.g2 = Mat<Scalar>::Constant(g.g1.rows(), g.g1.cols(), Scalar(1)) - g.g1;
  return g;
}

/// Quadratic-interpolated FFT on the log-spectra of the harmonic magnitude.
///
/// Per frame, strict local maxima over +/- peak_neighborhood bins (above a
/// 1e-12 magnitude floor) get a sub-bin vertex offset
///   delta = 0.5 (a - c) / (a - 2b + c)
/// from the log-magnitudes at the peak and its neighbours, clamped to
/// [-0.5, 0.5]; non-negative curvature degenerates to delta = 0. Every
/// channel then takes the frequency of its assigned peak (nearest peak, or
/// lobe boundaries at local minima), and frames with no peak fall back to
/// the bin-center frequencies f / fft_length.
template <typename Scalar>
FrequencyField<Scalar> estimate_frequencies(const MagSpectrogram<Scalar>& v2,
                                            const PuHpssConfig& cfg = {}) {
  validate(cfg);
  if (!v2.bins.allFinite() || (v2.bins.array() < Scalar(0)).any()) {
    throw std::invalid_argument("estimate_frequencies: invalid magnitude spectrogram");
  }
  const Index bins = v2.bins.rows();
  const Index frames = v2.bins.cols();
  const Scalar nfft = Scalar(v2.config.fft_length);
  constexpr Scalar kMagFloor = Scalar(1e-12);
  constexpr Scalar kLogFloor = Scalar(1e-12);

  FrequencyField<Scalar> out;
  out.nu.resize(bins, frames);

  std::vector<Index> peaks;
  std::vector<Scalar> peak_nu;
  for (Index t = 0; t < frames; ++t) {
    peaks.clear();
    peak_nu.clear();
    for (Index f = 1; f + 1 < bins; ++f) {
      const Scalar v = v2.bins(f, t);
      if (v < kMagFloor) continue;
      bool is_peak = true;
      for (Index k = 1; k <= cfg.peak_neighborhood && is_peak; ++k) {
        if (f - k >= 0 && v2.bins(f - k, t) >= v) is_peak = false;
        if (f + k < bins && v2.bins(f + k, t) >= v) is_peak = false;
      }
      if (!is_peak) continue;
      const Scalar a = std::log(std::max(v2.bins(f - 1, t), kLogFloor));
      const Scalar b = std::log(std::max(v, kLogFloor));
      const Scalar c = std::log(std::max(v2.bins(f + 1, t), kLogFloor));
      const Scalar curvature = a - Scalar(2) * b + c;
      Scalar delta = Scalar(0);
      if (curvature < Scalar(0)) {
        delta = Scalar(0.5) * (a - c) / curvature;
        delta = std::clamp(delta, Scalar(-0.5), Scalar(0.5));
      }
      peaks.push_back(f);
      peak_nu.push_back(std::clamp((Scalar(f) + delta) / nfft, Scalar(0), Scalar(0.5)));
    }

    if (peaks.empty()) {
      for (Index f = 0; f < bins; ++f) out.nu(f, t) = Scalar(f) / nfft;
      continue;
    }

    if (cfg.assign_rule == PeakAssign::NearestPeak) {
      size_t p = 0;
      for (Index f = 0; f < bins; ++f) {
        while (p + 1 < peaks.size() &&
               std::abs(peaks[p + 1] - f) < std::abs(peaks[p] - f)) {
          ++p;
        }
        out.nu(f, t) = peak_nu[p];
      }
    } else {
      // Lobe boundaries at the magnitude minimum between consecutive peaks.
      size_t p = 0;
      Index boundary = bins;  // upper bin (exclusive) of the current lobe
      auto lobe_end = [&](size_t pk) -> Index {
        if (pk + 1 >= peaks.size()) return bins;
        Index lo = peaks[pk], hi = peaks[pk + 1], arg = lo;
        Scalar best = v2.bins(lo, t);
        for (Index f = lo + 1; f <= hi; ++f) {
          if (v2.bins(f, t) < best) {
            best = v2.bins(f, t);
            arg = f;
          }
        }
        return arg + 1;
      };
      boundary = lobe_end(0);
      for (Index f = 0; f < bins; ++f) {
        while (f >= boundary && p + 1 < peaks.size()) {
          ++p;
          boundary = lobe_end(p);
        }
        out.nu(f, t) = peak_nu[p];
      }
    }
  }
  return out;
}

/// One sinusoidal-model step: phi_prev + 2*pi*l*nu, wrapped to (-pi, pi].
template <typename Scalar>
Scalar unwrap_phase_step(Scalar phi_prev, int hop_length, Scalar nu) {
  return wrap_phase(phi_prev + two_pi_v<Scalar> * Scalar(hop_length) * nu);
}

/// Per-frame mixing error ||x_t - s1_t - s2_t||^2 after initialization
/// (row 0) and after each inner iteration. Frame 0 receives no inner
/// updates; its column repeats the initialization value.
template <typename Scalar>
struct MixErrorTrace {
  Mat<Scalar> c;  // (max_iter + 1) x frames

  bool empty() const { return c.size() == 0; }
};

/// PU-HPSS (sinusoidal-model phase recovery for harmonic/percussive pairs).
///
/// Frame 0 takes the mixture phase for both sources. For each later frame the
/// percussive phase restarts from the mixture while the harmonic phase is
/// unwrapped from the previous frame, then max_iter inner iterations
/// redistribute the mixing error with Wiener gains and renormalize to the
/// target magnitudes. Entries where the update lands exactly on zero keep
/// their previous phase.
template <typename Scalar>
SourcePair<Scalar> pu_hpss(const ComplexSpectrogram<Scalar>& x, const MagSpectrogram<Scalar>& v1,
                           const MagSpectrogram<Scalar>& v2, const PuHpssConfig& cfg = {},
                           MixErrorTrace<Scalar>* trace = nullptr) {
  validate(cfg);
  const Index bins = x.bins.rows();
  const Index frames = x.bins.cols();
  if (v1.bins.rows() != bins || v1.bins.cols() != frames || v2.bins.rows() != bins ||
      v2.bins.cols() != frames) {
    throw std::invalid_argument("pu_hpss: shape mismatch");
  }
  if (!x.bins.allFinite()) throw std::invalid_argument("pu_hpss: non-finite mixture");

  const GainField<Scalar> gains = wiener_gains(v1, v2);
  const FrequencyField<Scalar> freqs = estimate_frequencies(v2, cfg);
  const int hop = x.config.hop_length;

  SourcePair<Scalar> out;
  out.percussive.bins.resize(bins, frames);
  out.percussive.config = x.config;
  out.percussive.sample_rate = x.sample_rate;
  out.harmonic.bins.resize(bins, frames);
  out.harmonic.config = x.config;
  out.harmonic.sample_rate = x.sample_rate;

  if (trace != nullptr) trace->c = Mat<Scalar>::Zero(cfg.max_iter + 1, frames);

  auto frame_error = [&](Index t) {
    Scalar e = Scalar(0);
    for (Index f = 0; f < bins; ++f) {
      const std::complex<Scalar> d = x.bins(f, t) - out.percussive.bins(f, t) - out.harmonic.bins(f, t);
      e += std::norm(d);
    }
    return e;
  };

  // Frame 0: mixture phase for both sources, no inner updates.
  for (Index f = 0; f < bins; ++f) {
    const Scalar phi = arg_convention(x.bins(f, 0));
    const std::complex<Scalar> unit(std::cos(phi), std::sin(phi));
    out.percussive.bins(f, 0) = v1.bins(f, 0) * unit;
    out.harmonic.bins(f, 0) = v2.bins(f, 0) * unit;
  }
  if (trace != nullptr) trace->c.col(0).setConstant(frame_error(0));

  for (Index t = 1; t < frames; ++t) {
    for (Index f = 0; f < bins; ++f) {
      const Scalar phi1 = arg_convention(x.bins(f, t));
      const Scalar phi2 =
          unwrap_phase_step(arg_convention(out.harmonic.bins(f, t - 1)), hop, freqs.nu(f, t));
      out.percussive.bins(f, t) =
          v1.bins(f, t) * std::complex<Scalar>(std::cos(phi1), std::sin(phi1));
      out.harmonic.bins(f, t) =
          v2.bins(f, t) * std::complex<Scalar>(std::cos(phi2), std::sin(phi2));
    }
    if (trace != nullptr) trace->c(0, t) = frame_error(t);

    for (int it = 1; it <= cfg.max_iter; ++it) {
      for (Index f = 0; f < bins; ++f) {
        const std::complex<Scalar> err =
            x.bins(f, t) - out.percussive.bins(f, t) - out.harmonic.bins(f, t);
        const std::complex<Scalar> y1 = out.percussive.bins(f, t) + gains.g1(f, t) * err;
        const std::complex<Scalar> y2 = out.harmonic.bins(f, t) + gains.g2(f, t) * err;
        const Scalar m1 = std::abs(y1);
        const Scalar m2 = std::abs(y2);
        if (m1 > Scalar(0)) out.percussive.bins(f, t) = v1.bins(f, t) * (y1 / m1);
        if (m2 > Scalar(0)) out.harmonic.bins(f, t) = v2.bins(f, t) * (y2 / m2);
      }
      if (trace != nullptr) trace->c(it, t) = frame_error(t);
    }
  }
  return out;
}

}  // namespace hpss

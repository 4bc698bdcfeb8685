#pragma once

#include <algorithm>
#include <vector>

#include "hpss/signal.hpp"

namespace hpss {

enum class MaskKind { Binary, WienerP2 };

/// Horizontal/vertical median-filter sizes. Kernels are odd frame/bin counts;
/// shrunken edge windows of even size take the lower-middle order statistic.
struct MedianFilterParams {
  int time_kernel = 17;
  int freq_kernel = 17;
  MaskKind mask_kind = MaskKind::WienerP2;
};

inline void validate(const MedianFilterParams& p) {
  if (p.time_kernel < 3 || p.time_kernel % 2 == 0 || p.freq_kernel < 3 || p.freq_kernel % 2 == 0) {
    throw std::invalid_argument("MedianFilterParams: kernels must be odd and >= 3");
  }
}

namespace detail {

template <typename Scalar>
Scalar lower_median(std::vector<Scalar>& buf) {
  const auto mid = (buf.size() - 1) / 2;
  std::nth_element(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(mid), buf.end());
  return buf[mid];
}

}  // namespace detail

/// Sliding median along each row (the time direction); edges shrink.
template <typename Scalar>
Mat<Scalar> median_filter_rows(const Mat<Scalar>& m, int kernel) {
  const Index rows = m.rows(), cols = m.cols();
  const Index half = kernel / 2;
  Mat<Scalar> out(rows, cols);
  std::vector<Scalar> buf;
  for (Index f = 0; f < rows; ++f) {
    for (Index t = 0; t < cols; ++t) {
      const Index lo = std::max<Index>(0, t - half);
      const Index hi = std::min<Index>(cols - 1, t + half);
      buf.clear();
      for (Index j = lo; j <= hi; ++j) buf.push_back(m(f, j));
      out(f, t) = detail::lower_median(buf);
    }
  }
  return out;
}

/// Sliding median along each column (the frequency direction); edges shrink.
template <typename Scalar>
Mat<Scalar> median_filter_cols(const Mat<Scalar>& m, int kernel) {
  const Index rows = m.rows(), cols = m.cols();
  const Index half = kernel / 2;
  Mat<Scalar> out(rows, cols);
  std::vector<Scalar> buf;
  for (Index t = 0; t < cols; ++t) {
    for (Index f = 0; f < rows; ++f) {
      const Index lo = std::max<Index>(0, f - half);
      const Index hi = std::min<Index>(rows - 1, f + half);
      buf.clear();
      for (Index j = lo; j <= hi; ++j) buf.push_back(m(j, t));
      out(f, t) = detail::lower_median(buf);
    }
  }
  return out;
}

template <typename Scalar>
struct HpssDecomposition {
  MagSpectrogram<Scalar> percussive;  // V1_hat
  MagSpectrogram<Scalar> harmonic;    // V2_hat
  Mat<Scalar> percussive_mask;
};

/// Median-filter HPSS: a time-direction median enhances horizontal (harmonic)
/// structure, a frequency-direction median enhances vertical (percussive)
/// structure, and the percussive mask is either a p=2 Wiener ratio or a
/// binary comparison. V1 is percussive, V2 = Vx - V1. Where both filtered
/// spectra are zero the Wiener mask splits the energy evenly.
template <typename Scalar>
HpssDecomposition<Scalar> median_filter_hpss(const MagSpectrogram<Scalar>& vx,
                                             const MedianFilterParams& p) {
  validate(p);
  if (!vx.bins.allFinite() || (vx.bins.array() < Scalar(0)).any()) {
    throw std::invalid_argument("median_filter_hpss: invalid magnitude spectrogram");
  }
  const Mat<Scalar> harm = median_filter_rows(vx.bins, p.time_kernel);
  const Mat<Scalar> perc = median_filter_cols(vx.bins, p.freq_kernel);

  Mat<Scalar> mask(vx.bins.rows(), vx.bins.cols());
  if (p.mask_kind == MaskKind::WienerP2) {
    mask = perc.binaryExpr(harm, [](Scalar pv, Scalar hv) {
      const Scalar p2 = pv * pv, h2 = hv * hv;
      const Scalar denom = p2 + h2;
      return denom > Scalar(0) ? p2 / denom : Scalar(0.5);
    });
  } else {
    mask = perc.binaryExpr(harm, [](Scalar pv, Scalar hv) { return pv >= hv ? Scalar(1) : Scalar(0); });
  }

  HpssDecomposition<Scalar> out;
  out.percussive_mask = mask;
  out.percussive.bins = mask.cwiseProduct(vx.bins);
  out.percussive.config = vx.config;
  out.percussive.sample_rate = vx.sample_rate;
  out.harmonic.bins = vx.bins - out.percussive.bins;
  out.harmonic.config = vx.config;
  out.harmonic.sample_rate = vx.sample_rate;
  return out;
}

/// V2 = max(Vx - V1, 0) elementwise; `clamped` (optional) receives the number
/// of entries where the subtraction went negative.
template <typename Scalar>
MagSpectrogram<Scalar> complement_magnitude(const MagSpectrogram<Scalar>& vx,
                                            const MagSpectrogram<Scalar>& v1,
                                            Index* clamped = nullptr) {
  if (vx.bins.rows() != v1.bins.rows() || vx.bins.cols() != v1.bins.cols()) {
    throw std::invalid_argument("complement_magnitude: shape mismatch");
  }
  MagSpectrogram<Scalar> out;
  out.config = vx.config;
  out.sample_rate = vx.sample_rate;
  out.bins = (vx.bins - v1.bins).cwiseMax(Scalar(0));
  if (clamped != nullptr) {
    *clamped = ((vx.bins - v1.bins).array() < Scalar(0)).count();
  }
  return out;
}

}  // namespace hpss

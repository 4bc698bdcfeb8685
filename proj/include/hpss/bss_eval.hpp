#pragma once

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <vector>

#include "hpss/core.hpp"

namespace hpss {

/// Sliding-window scoring protocol. proj_filter_len is the number of
/// allowed distortion-filter taps in the projection basis; 512 matches the
/// de-facto bss_eval standard, 1 gives the closed-form oracle configuration.
struct EvalProtocol {
  double window_seconds = 30.0;
  double overlap_seconds = 15.0;
  int proj_filter_len = 512;
  double sdr_cap = 100.0;
};

inline void validate(const EvalProtocol& p) {
  if (!(p.window_seconds > 0) || p.overlap_seconds < 0 || p.overlap_seconds >= p.window_seconds) {
    throw std::invalid_argument("EvalProtocol: need 0 <= overlap < window");
  }
  if (p.proj_filter_len < 1) throw std::invalid_argument("EvalProtocol: proj_filter_len must be >= 1");
  if (!(p.sdr_cap > 0)) throw std::invalid_argument("EvalProtocol: sdr_cap must be positive");
}

template <typename Scalar>
struct WindowScore {
  Scalar sdr = Scalar(0);
  Scalar sir = Scalar(0);
  Scalar sar = Scalar(0);
  bool regularized = false;  // Gram matrix needed a ridge
};

template <typename Scalar>
struct SourceScores {
  std::vector<WindowScore<Scalar>> windows;
  Scalar median_sdr = Scalar(0);
  Scalar median_sir = Scalar(0);
  Scalar median_sar = Scalar(0);
};

/// Per-source, per-window SDR/SIR/SAR plus medians and grand averages.
template <typename Scalar>
struct EvalReport {
  std::vector<SourceScores<Scalar>> sources;
  std::vector<Scalar> window_starts_s;
  Scalar avg_median_sdr = Scalar(0);
  Scalar avg_median_sir = Scalar(0);
  Scalar avg_median_sar = Scalar(0);
  int skipped_silent_windows = 0;
  bool any_regularized = false;
};

namespace detail {

/// c[L-1+d] = sum_u a[u] * b[u+d] for d in (-L, L), via zero-padded FFT.
template <typename Scalar>
Vec<Scalar> cross_correlation(const Vec<Scalar>& a, const Vec<Scalar>& b, int taps) {
  const Index n = std::max(a.size(), b.size());
  const int padded = next_pow2(static_cast<int>(n) + taps);
  std::vector<Scalar> abuf(static_cast<size_t>(padded), Scalar(0));
  std::vector<Scalar> bbuf(static_cast<size_t>(padded), Scalar(0));
  for (Index i = 0; i < a.size(); ++i) abuf[static_cast<size_t>(i)] = a(i);
  for (Index i = 0; i < b.size(); ++i) bbuf[static_cast<size_t>(i)] = b(i);

  Eigen::FFT<Scalar> fft;
  std::vector<std::complex<Scalar>> fa, fb;
  fft.fwd(fa, abuf);
  fft.fwd(fb, bbuf);
  for (size_t i = 0; i < fa.size(); ++i) fa[i] = std::conj(fa[i]) * fb[i];
  std::vector<Scalar> corr;
  fft.inv(corr, fa, padded);

  Vec<Scalar> out(2 * taps - 1);
  for (int d = -(taps - 1); d <= taps - 1; ++d) {
    const int idx = d >= 0 ? d : padded + d;
    out(d + taps - 1) = corr[static_cast<size_t>(idx)];
  }
  return out;
}

template <typename Scalar>
Scalar db_capped(Scalar num, Scalar den, Scalar cap) {
  if (num <= Scalar(0)) return -cap;
  if (den <= Scalar(0)) return cap;
  return std::clamp(Scalar(10) * std::log10(num / den), -cap, cap);
}

template <typename Scalar>
bool needs_ridge(const Eigen::LDLT<Mat<Scalar>>& ldlt) {
  if (ldlt.info() != Eigen::Success) return true;
  const Vec<Scalar> d = ldlt.vectorD();
  const Scalar dmax = d.cwiseAbs().maxCoeff();
  return d.minCoeff() < Scalar(1e-12) * std::max(dmax, Scalar(1));
}

}  // namespace detail

/// BSS-eval projection decomposition (Vincent et al.): each estimate is
/// decomposed against the span of all references delayed by up to
/// proj_filter_len taps, with
///   s_target = projection onto the matching reference's delays,
///   e_interf = remaining projection onto all references,
///   e_artif  = residual,
/// and SDR/SIR/SAR are energy ratios in dB, capped at +/- sdr_cap. A
/// rank-deficient Gram matrix falls back to ridge-regularized least squares
/// and is flagged in the score.
template <typename Scalar>
std::vector<WindowScore<Scalar>> bss_eval_window(const std::vector<Vec<Scalar>>& estimates,
                                                 const std::vector<Vec<Scalar>>& references,
                                                 const EvalProtocol& proto = {}) {
  validate(proto);
  const size_t n_src = references.size();
  if (n_src == 0 || estimates.size() != n_src) {
    throw std::invalid_argument("bss_eval_window: need matching estimate/reference counts");
  }
  const Index n = references[0].size();
  for (const auto& r : references) {
    if (r.size() != n) throw std::invalid_argument("bss_eval_window: length mismatch");
  }
  for (const auto& e : estimates) {
    if (e.size() != n) throw std::invalid_argument("bss_eval_window: length mismatch");
  }
  const int taps = proto.proj_filter_len;
  const Index dim = static_cast<Index>(n_src) * taps;
  const Scalar cap = Scalar(proto.sdr_cap);

  // Gram matrix of delayed references: G[(k,tau),(k',tau')] = rho_kk'(tau - tau').
  Mat<Scalar> gram(dim, dim);
  for (size_t k = 0; k < n_src; ++k) {
    for (size_t k2 = 0; k2 < n_src; ++k2) {
      const Vec<Scalar> rho = detail::cross_correlation(references[k], references[k2], taps);
      for (int t1 = 0; t1 < taps; ++t1) {
        for (int t2 = 0; t2 < taps; ++t2) {
          gram(static_cast<Index>(k) * taps + t1, static_cast<Index>(k2) * taps + t2) =
              rho(t1 - t2 + taps - 1);
        }
      }
    }
  }

  bool regularized = false;
  Eigen::LDLT<Mat<Scalar>> full(gram);
  if (detail::needs_ridge(full)) {
    regularized = true;
    const Scalar ridge = Scalar(1e-10) * std::max<Scalar>(gram.diagonal().maxCoeff(), Scalar(1));
    full.compute(gram + ridge * Mat<Scalar>::Identity(dim, dim));
  }

  std::vector<Eigen::LDLT<Mat<Scalar>>> own;
  own.reserve(n_src);
  for (size_t k = 0; k < n_src; ++k) {
    const Mat<Scalar> block = gram.block(static_cast<Index>(k) * taps, static_cast<Index>(k) * taps, taps, taps);
    own.emplace_back(block);
    if (detail::needs_ridge(own.back())) {
      regularized = true;
      const Scalar ridge = Scalar(1e-10) * std::max<Scalar>(block.diagonal().maxCoeff(), Scalar(1));
      own.back().compute(block + ridge * Mat<Scalar>::Identity(taps, taps));
    }
  }

  std::vector<WindowScore<Scalar>> scores(n_src);
  for (size_t j = 0; j < n_src; ++j) {
    Vec<Scalar> d(dim);
    for (size_t k = 0; k < n_src; ++k) {
      const Vec<Scalar> rho = detail::cross_correlation(references[k], estimates[j], taps);
      for (int tau = 0; tau < taps; ++tau) {
        d(static_cast<Index>(k) * taps + tau) = rho(tau + taps - 1);
      }
    }
    const Vec<Scalar> c_full = full.solve(d);
    const Scalar e_projected = c_full.dot(d);  // || P_all estimate ||^2

    const Vec<Scalar> d_own = d.segment(static_cast<Index>(j) * taps, taps);
    const Vec<Scalar> c_own = own[j].solve(d_own);
    const Scalar e_target = c_own.dot(d_own);  // || s_target ||^2

    const Scalar e_est = estimates[j].squaredNorm();
    const Scalar e_interf = std::max(e_projected - e_target, Scalar(0));
    const Scalar e_artif = std::max(e_est - e_projected, Scalar(0));
    const Scalar e_dist = std::max(e_est - e_target, Scalar(0));  // interference + artifacts

    scores[j].sdr = detail::db_capped(e_target, e_dist, cap);
    scores[j].sir = detail::db_capped(e_target, e_interf, cap);
    scores[j].sar = detail::db_capped(e_projected, e_artif, cap);
    scores[j].regularized = regularized;
  }
  return scores;
}

namespace detail {

template <typename Scalar>
Scalar median_of(std::vector<Scalar> values) {
  std::sort(values.begin(), values.end());
  const size_t n = values.size();
  if (n == 0) return std::numeric_limits<Scalar>::quiet_NaN();
  return n % 2 == 1 ? values[n / 2] : (values[n / 2 - 1] + values[n / 2]) / Scalar(2);
}

}  // namespace detail

/// Scores sliding windows (hop = window - overlap; tracks shorter than one
/// window yield a single whole-track window) and aggregates per-source
/// medians. Windows where any reference has energy below 1e-12 are skipped
/// and counted.
template <typename Scalar>
EvalReport<Scalar> evaluate_track(const std::vector<Vec<Scalar>>& estimates,
                                  const std::vector<Vec<Scalar>>& references, int sample_rate,
                                  const EvalProtocol& proto = {}) {
  validate(proto);
  if (sample_rate <= 0) throw std::invalid_argument("evaluate_track: sample_rate must be positive");
  const size_t n_src = references.size();
  if (n_src == 0 || estimates.size() != n_src) {
    throw std::invalid_argument("evaluate_track: need matching estimate/reference counts");
  }
  const Index n = references[0].size();
  const Index win = std::min<Index>(n, static_cast<Index>(std::llround(proto.window_seconds * sample_rate)));
  const Index hop = std::max<Index>(
      1, static_cast<Index>(std::llround((proto.window_seconds - proto.overlap_seconds) * sample_rate)));

  EvalReport<Scalar> report;
  report.sources.resize(n_src);

  for (Index start = 0; start + win <= n; start += hop) {
    bool silent = false;
    for (const auto& r : references) {
      if (r.segment(start, win).squaredNorm() < Scalar(1e-12)) {
        silent = true;
        break;
      }
    }
    if (silent) {
      ++report.skipped_silent_windows;
      continue;
    }
    std::vector<Vec<Scalar>> est_w(n_src), ref_w(n_src);
    for (size_t k = 0; k < n_src; ++k) {
      est_w[k] = estimates[k].segment(start, win);
      ref_w[k] = references[k].segment(start, win);
    }
    const auto scores = bss_eval_window(est_w, ref_w, proto);
    for (size_t k = 0; k < n_src; ++k) {
      report.sources[k].windows.push_back(scores[k]);
      report.any_regularized = report.any_regularized || scores[k].regularized;
    }
    report.window_starts_s.push_back(Scalar(start) / Scalar(sample_rate));
  }

  if (report.window_starts_s.empty()) {
    throw DataError("evaluate_track: no scorable windows (all references silent)");
  }

  Scalar sum_sdr = Scalar(0), sum_sir = Scalar(0), sum_sar = Scalar(0);
  for (auto& src : report.sources) {
    std::vector<Scalar> sdr, sir, sar;
    for (const auto& w : src.windows) {
      sdr.push_back(w.sdr);
      sir.push_back(w.sir);
      sar.push_back(w.sar);
    }
    src.median_sdr = detail::median_of(sdr);
    src.median_sir = detail::median_of(sir);
    src.median_sar = detail::median_of(sar);
    sum_sdr += src.median_sdr;
    sum_sir += src.median_sir;
    sum_sar += src.median_sar;
  }
  report.avg_median_sdr = sum_sdr / Scalar(n_src);
  report.avg_median_sir = sum_sir / Scalar(n_src);
  report.avg_median_sar = sum_sar / Scalar(n_src);
  return report;
}

}  // namespace hpss

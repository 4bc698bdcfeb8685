#pragma once

#include <cstdint>

#include "hpss/gru.hpp"
#include "hpss/signal.hpp"

namespace hpss {

/// Dimensions and loss mix of the toy-scale MaD TwinNet.
///
/// The encoder runs one GRU per direction at width n_bins so its residual
/// connection with the input spectrogram is well-formed; rnn_hidden sets the
/// width of the forward decoder and of the twin network that mirrors it.
template <typename Scalar>
struct MadConfig {
  int n_bins = 129;
  int seq_length = 60;
  int context = 10;
  int rnn_hidden = 258;
  int fnn_hidden = 129;
  Scalar twin_weight = Scalar(0.5);
  Scalar lambda_masker = Scalar(1);
  Scalar lambda_denoiser = Scalar(1);
  Scalar epsilon_floor = Scalar(1e-8);
  bool twin_stop_gradient = false;

  int central_frames() const { return seq_length - 2 * context; }

  static MadConfig toy(int bins = 129) {
    MadConfig cfg;
    cfg.n_bins = bins;
    cfg.rnn_hidden = 2 * bins;
    cfg.fnn_hidden = bins;
    return cfg;
  }
};

template <typename Scalar>
void validate(const MadConfig<Scalar>& cfg) {
  if (cfg.n_bins <= 0 || cfg.rnn_hidden <= 0 || cfg.fnn_hidden <= 0 || cfg.seq_length <= 0) {
    throw std::invalid_argument("MadConfig: counts must be positive");
  }
  if (cfg.context < 0 || cfg.seq_length <= 2 * cfg.context) {
    throw std::invalid_argument("MadConfig: need seq_length > 2*context >= 0");
  }
  if (cfg.twin_weight < Scalar(0) || cfg.lambda_masker < Scalar(0) || cfg.lambda_denoiser < Scalar(0)) {
    throw std::invalid_argument("MadConfig: loss weights must be nonnegative");
  }
  if (!(cfg.epsilon_floor > Scalar(0))) {
    throw std::invalid_argument("MadConfig: epsilon_floor must be positive");
  }
}

/// All trainable tensors. The twin branch replicates the decoder stack
/// (backward GRU + sparsifying transform) and psi is the affine map that
/// couples decoder states to twin states in the regularization term.
template <typename Scalar>
struct MadParameters {
  GruParams<Scalar> enc_fwd, enc_bwd;  // n_bins -> n_bins
  GruParams<Scalar> dec;               // 2*n_bins -> rnn_hidden
  Linear<Scalar> fnn_m;                // rnn_hidden -> n_bins
  Linear<Scalar> den_enc;              // n_bins -> fnn_hidden
  Linear<Scalar> den_dec;              // fnn_hidden -> n_bins
  GruParams<Scalar> twin_bwd;          // 2*n_bins -> rnn_hidden
  Linear<Scalar> twin_fnn;             // rnn_hidden -> n_bins
  Linear<Scalar> psi;                  // rnn_hidden -> rnn_hidden

  static MadParameters shaped(const MadConfig<Scalar>& cfg) {
    const Index f = cfg.n_bins, d = cfg.rnn_hidden, q = cfg.fnn_hidden;
    MadParameters p;
    p.enc_fwd = GruParams<Scalar>::zeros(f, f);
    p.enc_bwd = GruParams<Scalar>::zeros(f, f);
    p.dec = GruParams<Scalar>::zeros(2 * f, d);
    p.fnn_m = Linear<Scalar>::zeros(f, d);
    p.den_enc = Linear<Scalar>::zeros(q, f);
    p.den_dec = Linear<Scalar>::zeros(f, q);
    p.twin_bwd = GruParams<Scalar>::zeros(2 * f, d);
    p.twin_fnn = Linear<Scalar>::zeros(f, d);
    p.psi = Linear<Scalar>::zeros(d, d);
    return p;
  }

  /// Seeded init: every tensor of a layer is drawn from
  /// uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)), where fan_in is the hidden
  /// width for recurrent layers and the input width for linear ones.
  static MadParameters init(const MadConfig<Scalar>& cfg, std::uint64_t seed) {
    validate(cfg);
    MadParameters p = shaped(cfg);
    Rng rng(seed);
    auto fill = [&rng](auto& tensor, Index fan_in) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
      Scalar* data = tensor.data();
      for (Index i = 0; i < tensor.size(); ++i) data[i] = Scalar(rng.uniform(-bound, bound));
    };
    auto fill_gru = [&fill](GruParams<Scalar>& g) {
      const Index h = g.hidden_size();
      fill(g.wz, h); fill(g.wr, h); fill(g.wn, h);
      fill(g.uz, h); fill(g.ur, h); fill(g.un, h);
      fill(g.bz, h); fill(g.br, h); fill(g.bn, h);
    };
    auto fill_linear = [&fill](Linear<Scalar>& l) {
      const Index in = l.w.cols();
      fill(l.w, in);
      fill(l.b, in);
    };
    fill_gru(p.enc_fwd);
    fill_gru(p.enc_bwd);
    fill_gru(p.dec);
    fill_linear(p.fnn_m);
    fill_linear(p.den_enc);
    fill_linear(p.den_dec);
    fill_gru(p.twin_bwd);
    fill_linear(p.twin_fnn);
    fill_linear(p.psi);
    return p;
  }

  /// Visits every tensor as (name, Eigen matrix/vector) in a fixed order.
  template <typename Self, typename Fn>
  static void visit_impl(Self& self, Fn&& fn) {
    auto gru = [&fn](const char* base, auto& g) {
      const std::string s(base);
      fn(s + ".wz", g.wz); fn(s + ".wr", g.wr); fn(s + ".wn", g.wn);
      fn(s + ".uz", g.uz); fn(s + ".ur", g.ur); fn(s + ".un", g.un);
      fn(s + ".bz", g.bz); fn(s + ".br", g.br); fn(s + ".bn", g.bn);
    };
    auto linear = [&fn](const char* base, auto& l) {
      const std::string s(base);
      fn(s + ".w", l.w);
      fn(s + ".b", l.b);
    };
    gru("enc_fwd", self.enc_fwd);
    gru("enc_bwd", self.enc_bwd);
    gru("dec", self.dec);
    linear("fnn_m", self.fnn_m);
    linear("den_enc", self.den_enc);
    linear("den_dec", self.den_dec);
    gru("twin_bwd", self.twin_bwd);
    linear("twin_fnn", self.twin_fnn);
    linear("psi", self.psi);
  }

  template <typename Fn>
  void visit(Fn&& fn) { visit_impl(*this, fn); }
  template <typename Fn>
  void visit(Fn&& fn) const { visit_impl(*this, fn); }

  Index total_size() const {
    Index n = 0;
    visit([&n](const std::string&, const auto& t) { n += t.size(); });
    return n;
  }
};

/// Per-layer activations retained for backprop and inspection. Central
/// matrices (mask, v1p, den_*, v1) cover the seq_length - 2*context frames
/// that survive context trimming.
template <typename Scalar>
struct ForwardTrace {
  Mat<Scalar> vx;  // input segment, n_bins x seq_length
  GruTrace<Scalar> enc_fwd_tr, enc_bwd_tr, dec_tr, twin_tr;
  Mat<Scalar> h_enc;       // 2*n_bins x seq_length
  Mat<Scalar> mask;        // n_bins x central
  Mat<Scalar> v1p;         // masker output
  Mat<Scalar> den_hidden;  // fnn_hidden x central, post-ReLU
  Mat<Scalar> den_filter;  // n_bins x central, post-ReLU
  Mat<Scalar> v1;          // denoiser output
  Mat<Scalar> h_twin;      // rnn_hidden x seq_length, time-aligned
  bool has_twin = false;
};

namespace detail {

template <typename Scalar>
Mat<Scalar> relu(const Mat<Scalar>& m) {
  return m.cwiseMax(Scalar(0));
}

template <typename Scalar>
Mat<Scalar> reverse_cols(const Mat<Scalar>& m) {
  return m.rowwise().reverse();
}

}  // namespace detail

/// Bi-directional encoder with residual input connection, forward decoder,
/// sparsifying transform, and the skip-filtering product V1' = M . Vx on the
/// central frames.
template <typename Scalar>
ForwardTrace<Scalar> masker_forward(const Mat<Scalar>& vx_segment,
                                    const MadParameters<Scalar>& params,
                                    const MadConfig<Scalar>& cfg) {
  validate(cfg);
  if (vx_segment.rows() != cfg.n_bins || vx_segment.cols() != cfg.seq_length) {
    throw std::invalid_argument("masker_forward: segment must be n_bins x seq_length");
  }
  const Index f = cfg.n_bins;
  const Index frames = cfg.seq_length;
  const Index central = cfg.central_frames();

  ForwardTrace<Scalar> tr;
  tr.vx = vx_segment;
  tr.enc_fwd_tr = gru_forward(params.enc_fwd, vx_segment);
  const Mat<Scalar> vx_rev = detail::reverse_cols(vx_segment);
  tr.enc_bwd_tr = gru_forward(params.enc_bwd, vx_rev);

  tr.h_enc.resize(2 * f, frames);
  for (Index t = 0; t < frames; ++t) {
    tr.h_enc.col(t).head(f) = tr.enc_fwd_tr.h.col(t) + vx_segment.col(t);
    tr.h_enc.col(t).tail(f) = tr.enc_bwd_tr.h.col(frames - 1 - t) + vx_segment.col(t);
  }

  tr.dec_tr = gru_forward(params.dec, tr.h_enc);

  const Mat<Scalar> h_dec_central = tr.dec_tr.h.middleCols(cfg.context, central);
  tr.mask = detail::relu(Mat<Scalar>(params.fnn_m(h_dec_central)));
  tr.v1p = tr.mask.cwiseProduct(vx_segment.middleCols(cfg.context, central));
  return tr;
}

/// Two feed-forward layers whose output filters the masker estimate through a
/// second skip-filtering product.
template <typename Scalar>
Mat<Scalar> denoiser_forward(const Mat<Scalar>& v1p, const MadParameters<Scalar>& params,
                             Mat<Scalar>* hidden_out = nullptr, Mat<Scalar>* filter_out = nullptr) {
  if (v1p.rows() != params.den_enc.w.cols()) {
    throw std::invalid_argument("denoiser_forward: bin count mismatch");
  }
  const Mat<Scalar> hidden = detail::relu(Mat<Scalar>(params.den_enc(v1p)));
  const Mat<Scalar> filter = detail::relu(Mat<Scalar>(params.den_dec(hidden)));
  if (hidden_out != nullptr) *hidden_out = hidden;
  if (filter_out != nullptr) *filter_out = filter;
  return filter.cwiseProduct(v1p);
}

/// Backward twin GRU over the encoder states; h_twin.col(t) is the twin state
/// for frame t.
template <typename Scalar>
void twin_forward(ForwardTrace<Scalar>& tr, const MadParameters<Scalar>& params) {
  const Mat<Scalar> h_enc_rev = detail::reverse_cols(tr.h_enc);
  tr.twin_tr = gru_forward(params.twin_bwd, h_enc_rev);
  tr.h_twin = detail::reverse_cols(tr.twin_tr.h);
  tr.has_twin = true;
}

/// Runs masker, denoiser, and (optionally) the twin branch on one segment.
template <typename Scalar>
ForwardTrace<Scalar> forward_full(const Mat<Scalar>& vx_segment,
                                  const MadParameters<Scalar>& params,
                                  const MadConfig<Scalar>& cfg, bool with_twin = true) {
  ForwardTrace<Scalar> tr = masker_forward(vx_segment, params, cfg);
  tr.v1 = denoiser_forward(tr.v1p, params, &tr.den_hidden, &tr.den_filter);
  if (with_twin) twin_forward(tr, params);
  return tr;
}

/// Generalized Kullback-Leibler divergence
///   sum_ft [ v log((v+eps)/(vhat+eps)) - v + vhat ],  v = target.
/// The sum is clamped at zero: the epsilon floor can push it a hair below
/// zero when the prediction sits within eps of the target.
template <typename Scalar>
Scalar generalized_kl(const Mat<Scalar>& v_hat, const Mat<Scalar>& v_target, Scalar eps) {
  if (v_hat.rows() != v_target.rows() || v_hat.cols() != v_target.cols()) {
    throw std::invalid_argument("generalized_kl: shape mismatch");
  }
  if (!(eps > Scalar(0))) throw std::invalid_argument("generalized_kl: eps must be positive");
  const auto v = v_target.array();
  const auto vh = v_hat.array();
  const Scalar sum = (v * ((v + eps) / (vh + eps)).log() - v + vh).sum();
  return std::max(sum, Scalar(0));
}

/// L_twin = sum_t || psi(h_dec_t) - h_twin_t ||  (Frobenius norm per frame).
template <typename Scalar>
Scalar twin_loss(const ForwardTrace<Scalar>& tr, const MadParameters<Scalar>& params) {
  if (!tr.has_twin) throw std::invalid_argument("twin_loss: trace has no twin states");
  Scalar total = Scalar(0);
  for (Index t = 0; t < tr.dec_tr.h.cols(); ++t) {
    const Vec<Scalar> r = params.psi.w * tr.dec_tr.h.col(t) + params.psi.b - tr.h_twin.col(t);
    total += r.norm();
  }
  return total;
}

template <typename Scalar>
struct LossBreakdown {
  Scalar masker_kl = Scalar(0);
  Scalar denoiser_kl = Scalar(0);
  Scalar twin = Scalar(0);
  Scalar total = Scalar(0);
};

/// lambda_masker * KL(V1' vs target) + lambda_denoiser * KL(V1 vs target)
/// + twin_weight * L_twin. `v1_target_central` must already be trimmed to the
/// central frames.
template <typename Scalar>
LossBreakdown<Scalar> total_loss(const ForwardTrace<Scalar>& tr, const Mat<Scalar>& v1_target_central,
                                 const MadParameters<Scalar>& params, const MadConfig<Scalar>& cfg) {
  LossBreakdown<Scalar> out;
  out.masker_kl = generalized_kl(tr.v1p, v1_target_central, cfg.epsilon_floor);
  out.denoiser_kl = generalized_kl(tr.v1, v1_target_central, cfg.epsilon_floor);
  out.twin = tr.has_twin ? twin_loss(tr, params) : Scalar(0);
  out.total = cfg.lambda_masker * out.masker_kl + cfg.lambda_denoiser * out.denoiser_kl +
              cfg.twin_weight * out.twin;
  return out;
}

/// Exact reverse-mode gradient of total_loss. ReLU uses subgradient 0 at 0,
/// and a zero-norm twin residual contributes subgradient 0. With
/// twin_stop_gradient the twin states are treated as constants, so the twin
/// GRU receives no gradient.
template <typename Scalar>
MadParameters<Scalar> backward(const ForwardTrace<Scalar>& tr, const Mat<Scalar>& v1_target_central,
                               const MadParameters<Scalar>& params, const MadConfig<Scalar>& cfg) {
  validate(cfg);
  const Index f = cfg.n_bins;
  const Index frames = cfg.seq_length;
  const Index central = cfg.central_frames();
  if (v1_target_central.rows() != f || v1_target_central.cols() != central) {
    throw std::invalid_argument("backward: target must be n_bins x central_frames");
  }
  const Scalar eps = cfg.epsilon_floor;
  MadParameters<Scalar> grad = MadParameters<Scalar>::shaped(cfg);

  const auto vt = v1_target_central.array();

  // KL terms; d/dvhat = 1 - v/(vhat + eps).
  Mat<Scalar> d_v1 = (cfg.lambda_denoiser * (Scalar(1) - vt / (tr.v1.array() + eps))).matrix();
  Mat<Scalar> d_v1p = (cfg.lambda_masker * (Scalar(1) - vt / (tr.v1p.array() + eps))).matrix();

  // Denoiser: v1 = filter . v1p, filter = ReLU(den_dec(ReLU(den_enc(v1p)))).
  const Mat<Scalar> d_filter = d_v1.cwiseProduct(tr.v1p);
  d_v1p += d_v1.cwiseProduct(tr.den_filter);
  const Mat<Scalar> d_a_dec =
      d_filter.cwiseProduct((tr.den_filter.array() > Scalar(0)).template cast<Scalar>().matrix());
  grad.den_dec.w += d_a_dec * tr.den_hidden.transpose();
  grad.den_dec.b += d_a_dec.rowwise().sum();
  const Mat<Scalar> d_hidden = params.den_dec.w.transpose() * d_a_dec;
  const Mat<Scalar> d_a_enc =
      d_hidden.cwiseProduct((tr.den_hidden.array() > Scalar(0)).template cast<Scalar>().matrix());
  grad.den_enc.w += d_a_enc * tr.v1p.transpose();
  grad.den_enc.b += d_a_enc.rowwise().sum();
  d_v1p += params.den_enc.w.transpose() * d_a_enc;

  // Masker: v1p = mask . vx_central, mask = ReLU(fnn_m(h_dec_central)).
  const Mat<Scalar> vx_central = tr.vx.middleCols(cfg.context, central);
  const Mat<Scalar> d_mask = d_v1p.cwiseProduct(vx_central);
  const Mat<Scalar> d_a_mask =
      d_mask.cwiseProduct((tr.mask.array() > Scalar(0)).template cast<Scalar>().matrix());
  const Mat<Scalar> h_dec_central = tr.dec_tr.h.middleCols(cfg.context, central);
  grad.fnn_m.w += d_a_mask * h_dec_central.transpose();
  grad.fnn_m.b += d_a_mask.rowwise().sum();

  Mat<Scalar> d_h_dec = Mat<Scalar>::Zero(cfg.rnn_hidden, frames);
  d_h_dec.middleCols(cfg.context, central) += params.fnn_m.w.transpose() * d_a_mask;

  // Twin regularization.
  Mat<Scalar> d_h_enc = Mat<Scalar>::Zero(2 * f, frames);
  if (tr.has_twin && cfg.twin_weight > Scalar(0)) {
    Mat<Scalar> d_h_twin = Mat<Scalar>::Zero(cfg.rnn_hidden, frames);
    for (Index t = 0; t < frames; ++t) {
      const Vec<Scalar> r = params.psi.w * tr.dec_tr.h.col(t) + params.psi.b - tr.h_twin.col(t);
      const Scalar nrm = r.norm();
      if (nrm > Scalar(0)) {
        const Vec<Scalar> dr = (cfg.twin_weight / nrm) * r;
        grad.psi.w += dr * tr.dec_tr.h.col(t).transpose();
        grad.psi.b += dr;
        d_h_dec.col(t) += params.psi.w.transpose() * dr;
        if (!cfg.twin_stop_gradient) d_h_twin.col(t) -= dr;
      }
    }
    if (!cfg.twin_stop_gradient) {
      const Mat<Scalar> h_enc_rev = detail::reverse_cols(tr.h_enc);
      const Mat<Scalar> d_x_rev =
          gru_backward(params.twin_bwd, h_enc_rev, tr.twin_tr, detail::reverse_cols(d_h_twin),
                       grad.twin_bwd);
      d_h_enc += detail::reverse_cols(d_x_rev);
    }
  }

  // Decoder.
  d_h_enc += gru_backward(params.dec, tr.h_enc, tr.dec_tr, d_h_dec, grad.dec);

  // Encoder: h_enc = [h_fwd + vx ; h_bwd + vx].
  gru_backward(params.enc_fwd, tr.vx, tr.enc_fwd_tr, Mat<Scalar>(d_h_enc.topRows(f)), grad.enc_fwd);
  const Mat<Scalar> vx_rev = detail::reverse_cols(tr.vx);
  gru_backward(params.enc_bwd, vx_rev, tr.enc_bwd_tr,
               detail::reverse_cols(Mat<Scalar>(d_h_enc.bottomRows(f))), grad.enc_bwd);

  return grad;
}

/// Slides over the full spectrogram in hops of seq_length - 2*context frames,
/// reflect-padding the frame axis, and stitches the central outputs. Twin
/// parameters are never touched here.
template <typename Scalar>
MagSpectrogram<Scalar> predict_percussive(const MagSpectrogram<Scalar>& vx,
                                          const MadParameters<Scalar>& params,
                                          const MadConfig<Scalar>& cfg) {
  validate(cfg);
  if (vx.bins.rows() != cfg.n_bins) {
    throw std::invalid_argument("predict_percussive: bin count does not match config");
  }
  const Index n_frames = vx.bins.cols();
  if (n_frames == 0) throw std::invalid_argument("predict_percussive: empty spectrogram");
  const Index stride = cfg.central_frames();
  const Index windows = (n_frames + stride - 1) / stride;

  MagSpectrogram<Scalar> out;
  out.config = vx.config;
  out.sample_rate = vx.sample_rate;
  out.bins.resize(cfg.n_bins, n_frames);

  Mat<Scalar> segment(cfg.n_bins, cfg.seq_length);
  for (Index k = 0; k < windows; ++k) {
    for (Index i = 0; i < cfg.seq_length; ++i) {
      const Index src = reflect_index(k * stride + i - cfg.context, n_frames);
      segment.col(i) = vx.bins.col(src);
    }
    ForwardTrace<Scalar> tr = masker_forward(segment, params, cfg);
    const Mat<Scalar> v1 = denoiser_forward(tr.v1p, params);
    for (Index i = 0; i < stride; ++i) {
      const Index dst = k * stride + i;
      if (dst < n_frames) out.bins.col(dst) = v1.col(i);
    }
  }
  return out;
}

}  // namespace hpss

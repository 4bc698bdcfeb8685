#pragma once

#include <numeric>
#include <sstream>
#include <vector>

#include "hpss/madtwinnet.hpp"

namespace hpss {

/// First/second-moment stochastic gradient scheme:
///   m <- b1 m + (1-b1) g,  v <- b2 v + (1-b2) g^2,
///   theta -= lr * (m / (1-b1^t)) / (sqrt(v / (1-b2^t)) + eps).
struct AdamParams {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct TrainOptions {
  int steps = 500;
  int batch_size = 0;  // 0 = full batch
  AdamParams adam;
  bool with_twin = true;
};

template <typename Scalar>
struct TrainSegment {
  Mat<Scalar> vx;         // n_bins x seq_length
  Mat<Scalar> v1_target;  // n_bins x seq_length (trimmed internally)
};

template <typename Scalar>
struct TrainResult {
  MadParameters<Scalar> params;
  std::vector<LossBreakdown<Scalar>> curve;  // batch-mean losses per step
};

namespace detail {

template <typename Scalar>
class AdamState {
 public:
  explicit AdamState(const MadParameters<Scalar>& shape) {
    shape.visit([this](const std::string&, const auto& t) {
      m_.emplace_back(Vec<Scalar>::Zero(t.size()));
      v_.emplace_back(Vec<Scalar>::Zero(t.size()));
    });
  }

  void step(MadParameters<Scalar>& params, const MadParameters<Scalar>& grad, const AdamParams& opt) {
    ++t_;
    const Scalar b1 = Scalar(opt.beta1), b2 = Scalar(opt.beta2);
    const Scalar corr1 = Scalar(1) - std::pow(b1, Scalar(t_));
    const Scalar corr2 = Scalar(1) - std::pow(b2, Scalar(t_));
    std::vector<const Scalar*> gptr;
    std::vector<Index> gsize;
    grad.visit([&](const std::string&, const auto& g) {
      gptr.push_back(g.data());
      gsize.push_back(g.size());
    });
    Index slot = 0;
    params.visit([&](const std::string&, auto& p) {
      Scalar* data = p.data();
      const Scalar* g = gptr[static_cast<size_t>(slot)];
      auto& m = m_[static_cast<size_t>(slot)];
      auto& v = v_[static_cast<size_t>(slot)];
      for (Index i = 0; i < p.size(); ++i) {
        m(i) = b1 * m(i) + (Scalar(1) - b1) * g[i];
        v(i) = b2 * v(i) + (Scalar(1) - b2) * g[i] * g[i];
        const Scalar mhat = m(i) / corr1;
        const Scalar vhat = v(i) / corr2;
        data[i] -= Scalar(opt.learning_rate) * mhat / (std::sqrt(vhat) + Scalar(opt.epsilon));
      }
      ++slot;
    });
  }

 private:
  std::vector<Vec<Scalar>> m_, v_;
  long t_ = 0;
};

template <typename Scalar>
void accumulate(MadParameters<Scalar>& into, const MadParameters<Scalar>& from, Scalar scale) {
  std::vector<const Scalar*> src;
  std::vector<Index> sizes;
  from.visit([&](const std::string&, const auto& t) {
    src.push_back(t.data());
    sizes.push_back(t.size());
  });
  Index slot = 0;
  into.visit([&](const std::string&, auto& t) {
    Scalar* dst = t.data();
    const Scalar* s = src[static_cast<size_t>(slot)];
    for (Index i = 0; i < t.size(); ++i) dst[i] += scale * s[i];
    ++slot;
  });
}

}  // namespace detail

/// Mini-batch training over (Vx, V1) segments, deterministic given the seed:
/// initialization and the per-epoch segment shuffle both derive from it.
/// A non-finite loss aborts with step diagnostics.
template <typename Scalar>
TrainResult<Scalar> train(const std::vector<TrainSegment<Scalar>>& segments,
                          const MadConfig<Scalar>& cfg, const TrainOptions& opts,
                          std::uint64_t seed) {
  validate(cfg);
  if (segments.empty()) throw std::invalid_argument("train: no segments");
  for (const auto& seg : segments) {
    if (seg.vx.rows() != cfg.n_bins || seg.vx.cols() != cfg.seq_length ||
        seg.v1_target.rows() != cfg.n_bins || seg.v1_target.cols() != cfg.seq_length) {
      throw std::invalid_argument("train: segment shape does not match config");
    }
  }

  TrainResult<Scalar> result;
  result.params = MadParameters<Scalar>::init(cfg, seed);
  detail::AdamState<Scalar> adam(result.params);
  Rng shuffle_rng(seed ^ 0x9e3779b97f4a7c15ULL);

  std::vector<size_t> order(segments.size());
  std::iota(order.begin(), order.end(), size_t{0});
  const size_t batch = opts.batch_size > 0
                           ? std::min<size_t>(static_cast<size_t>(opts.batch_size), segments.size())
                           : segments.size();
  size_t cursor = order.size();  // triggers a reshuffle on first use

  const Index central = cfg.central_frames();
  for (int step = 0; step < opts.steps; ++step) {
    MadParameters<Scalar> grad = MadParameters<Scalar>::shaped(cfg);
    LossBreakdown<Scalar> mean;
    for (size_t b = 0; b < batch; ++b) {
      if (cursor >= order.size()) {
        for (size_t i = order.size(); i > 1; --i) {
          const size_t j = static_cast<size_t>(shuffle_rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
          std::swap(order[i - 1], order[j]);
        }
        cursor = 0;
      }
      const TrainSegment<Scalar>& seg = segments[order[cursor++]];
      const Mat<Scalar> target = seg.v1_target.middleCols(cfg.context, central);
      ForwardTrace<Scalar> tr = forward_full(seg.vx, result.params, cfg, opts.with_twin);
      const LossBreakdown<Scalar> loss = total_loss(tr, target, result.params, cfg);
      mean.masker_kl += loss.masker_kl;
      mean.denoiser_kl += loss.denoiser_kl;
      mean.twin += loss.twin;
      mean.total += loss.total;
      detail::accumulate(grad, backward(tr, target, result.params, cfg), Scalar(1));
    }
    const Scalar inv = Scalar(1) / Scalar(batch);
    mean.masker_kl *= inv;
    mean.denoiser_kl *= inv;
    mean.twin *= inv;
    mean.total *= inv;
    grad.visit([inv](const std::string&, auto& t) { t *= inv; });

    if (!std::isfinite(static_cast<double>(mean.total))) {
      std::ostringstream msg;
      msg << "train: loss diverged at step " << step << " (masker_kl=" << mean.masker_kl
          << ", denoiser_kl=" << mean.denoiser_kl << ", twin=" << mean.twin << ")";
      throw NumericError(msg.str());
    }
    adam.step(result.params, grad, opts.adam);
    result.curve.push_back(mean);
  }
  return result;
}

}  // namespace hpss

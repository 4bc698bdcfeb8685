#pragma once

#include "hpss/core.hpp"

namespace hpss {

namespace detail {

template <typename Scalar>
Scalar sigmoid(Scalar x) {
  if (x >= Scalar(0)) return Scalar(1) / (Scalar(1) + std::exp(-x));
  const Scalar e = std::exp(x);
  return e / (Scalar(1) + e);
}

}  // namespace detail

/// Gated recurrent unit with the reset gate applied to the previous state
/// before the candidate recurrence:
///   z = sigmoid(Wz x + Uz h + bz)
///   r = sigmoid(Wr x + Ur h + br)
///   n = tanh(Wn x + Un (r . h) + bn)
///   h' = (1 - z) . n + z . h
template <typename Scalar>
struct GruParams {
  Mat<Scalar> wz, wr, wn;  // hidden x input
  Mat<Scalar> uz, ur, un;  // hidden x hidden
  Vec<Scalar> bz, br, bn;

  Index input_size() const { return wz.cols(); }
  Index hidden_size() const { return wz.rows(); }

  static GruParams zeros(Index input, Index hidden) {
    GruParams p;
    p.wz = Mat<Scalar>::Zero(hidden, input);
    p.wr = Mat<Scalar>::Zero(hidden, input);
    p.wn = Mat<Scalar>::Zero(hidden, input);
    p.uz = Mat<Scalar>::Zero(hidden, hidden);
    p.ur = Mat<Scalar>::Zero(hidden, hidden);
    p.un = Mat<Scalar>::Zero(hidden, hidden);
    p.bz = Vec<Scalar>::Zero(hidden);
    p.br = Vec<Scalar>::Zero(hidden);
    p.bn = Vec<Scalar>::Zero(hidden);
    return p;
  }
};

/// Per-step activations retained for backpropagation through time.
template <typename Scalar>
struct GruTrace {
  Mat<Scalar> h;  // hidden x T, state after each step (h0 = 0 before step 0)
  Mat<Scalar> z, r, n;
};

template <typename Scalar>
GruTrace<Scalar> gru_forward(const GruParams<Scalar>& p, const Mat<Scalar>& x) {
  if (x.rows() != p.input_size()) throw std::invalid_argument("gru_forward: input size mismatch");
  const Index hidden = p.hidden_size();
  const Index steps = x.cols();
  GruTrace<Scalar> tr;
  tr.h.resize(hidden, steps);
  tr.z.resize(hidden, steps);
  tr.r.resize(hidden, steps);
  tr.n.resize(hidden, steps);

  Vec<Scalar> h_prev = Vec<Scalar>::Zero(hidden);
  for (Index t = 0; t < steps; ++t) {
    const Vec<Scalar> az = p.wz * x.col(t) + p.uz * h_prev + p.bz;
    const Vec<Scalar> ar = p.wr * x.col(t) + p.ur * h_prev + p.br;
    const Vec<Scalar> z = az.unaryExpr([](Scalar v) { return detail::sigmoid(v); });
    const Vec<Scalar> r = ar.unaryExpr([](Scalar v) { return detail::sigmoid(v); });
    const Vec<Scalar> an = p.wn * x.col(t) + p.un * r.cwiseProduct(h_prev) + p.bn;
    const Vec<Scalar> n = an.array().tanh();
    tr.z.col(t) = z;
    tr.r.col(t) = r;
    tr.n.col(t) = n;
    tr.h.col(t) = (Vec<Scalar>::Ones(hidden) - z).cwiseProduct(n) + z.cwiseProduct(h_prev);
    h_prev = tr.h.col(t);
  }
  return tr;
}

/// Backpropagation through time. `dh_out` holds the loss gradient w.r.t. the
/// state emitted at each step. Parameter gradients accumulate into `grad`;
/// the return value is the gradient w.r.t. the input sequence.
template <typename Scalar>
Mat<Scalar> gru_backward(const GruParams<Scalar>& p, const Mat<Scalar>& x,
                         const GruTrace<Scalar>& tr, const Mat<Scalar>& dh_out,
                         GruParams<Scalar>& grad) {
  const Index hidden = p.hidden_size();
  const Index steps = x.cols();
  Mat<Scalar> dx = Mat<Scalar>::Zero(x.rows(), steps);
  Vec<Scalar> dh_next = Vec<Scalar>::Zero(hidden);

  for (Index t = steps - 1; t >= 0; --t) {
    const Vec<Scalar> g = dh_out.col(t) + dh_next;
    const Vec<Scalar> h_prev = t > 0 ? Vec<Scalar>(tr.h.col(t - 1)) : Vec<Scalar>(Vec<Scalar>::Zero(hidden));
    const auto z = tr.z.col(t).array();
    const auto r = tr.r.col(t).array();
    const auto n = tr.n.col(t).array();

    const Vec<Scalar> dan = (g.array() * (Scalar(1) - z) * (Scalar(1) - n * n)).matrix();
    const Vec<Scalar> daz = (g.array() * (h_prev.array() - n) * z * (Scalar(1) - z)).matrix();

    Vec<Scalar> dh_prev = (g.array() * z).matrix();

    grad.wn += dan * x.col(t).transpose();
    grad.un += dan * (r * h_prev.array()).matrix().transpose();
    grad.bn += dan;

    const Vec<Scalar> un_t_dan = p.un.transpose() * dan;
    const Vec<Scalar> dar = (un_t_dan.array() * h_prev.array() * r * (Scalar(1) - r)).matrix();
    dh_prev.array() += un_t_dan.array() * r;

    grad.wz += daz * x.col(t).transpose();
    grad.uz += daz * h_prev.transpose();
    grad.bz += daz;
    dh_prev += p.uz.transpose() * daz;

    grad.wr += dar * x.col(t).transpose();
    grad.ur += dar * h_prev.transpose();
    grad.br += dar;
    dh_prev += p.ur.transpose() * dar;

    dx.col(t) = p.wz.transpose() * daz + p.wr.transpose() * dar + p.wn.transpose() * dan;
    dh_next = dh_prev;
  }
  return dx;
}

/// Fully connected layer, y = W x + b.
template <typename Scalar>
struct Linear {
  Mat<Scalar> w;
  Vec<Scalar> b;

  static Linear zeros(Index out, Index in) {
    Linear l;
    l.w = Mat<Scalar>::Zero(out, in);
    l.b = Vec<Scalar>::Zero(out);
    return l;
  }

  Mat<Scalar> operator()(const Mat<Scalar>& x) const { return (w * x).colwise() + b; }
};

}  // namespace hpss

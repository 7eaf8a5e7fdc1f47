#pragma once

// Binary autoencoder: F(h0) = step(h0 W_in) W_out + b.

#include "bae/entropy.hpp"
#include "bae/types.hpp"

#include <cmath>
#include <cstdint>
#include <random>

namespace bae {

template <typename Scalar>
struct BaeModel {
  Matrix<Scalar> w_in;   // d x d'
  Matrix<Scalar> w_out;  // d' x d
  Vector<Scalar> bias;   // d

  Index input_dim() const { return w_in.rows(); }
  Index hidden_dim() const { return w_in.cols(); }

  void validate() const {
    require_dims(hidden_dim() >= 1 && input_dim() >= 1, "empty model");
    require_dims(w_out.rows() == hidden_dim() && w_out.cols() == input_dim(),
                 "W_out shape");
    require_dims(bias.size() == input_dim(), "bias length");
    if (!w_in.allFinite() || !w_out.allFinite() || !bias.allFinite())
      throw std::invalid_argument("model parameters must be finite");
  }

  template <typename Other>
  BaeModel<Other> cast() const {
    return {w_in.template cast<Other>(), w_out.template cast<Other>(),
            bias.template cast<Other>()};
  }

  bool operator==(const BaeModel&) const = default;
};

/// Zero-valued parameters shaped like `like` (gradient / moment buffers).
template <typename Scalar>
BaeModel<Scalar> zeros_like(const BaeModel<Scalar>& like) {
  return {Matrix<Scalar>::Zero(like.w_in.rows(), like.w_in.cols()),
          Matrix<Scalar>::Zero(like.w_out.rows(), like.w_out.cols()),
          Vector<Scalar>::Zero(like.bias.size())};
}

inline constexpr Index kDefaultExpansion = 4;

/// Glorot-range uniform weights, zero bias; deterministic in `seed`.
inline BaeModel<double> init_model(Index d, Index d_hidden, std::uint64_t seed) {
  if (d < 1 || d_hidden < 1) throw std::invalid_argument("init_model: dims must be >= 1");
  std::mt19937_64 rng(seed);
  const double limit = std::sqrt(6.0 / static_cast<double>(d + d_hidden));
  std::uniform_real_distribution<double> uniform(-limit, limit);
  BaeModel<double> m;
  m.w_in.resize(d, d_hidden);
  m.w_out.resize(d_hidden, d);
  for (Index i = 0; i < m.w_in.size(); ++i) m.w_in.data()[i] = uniform(rng);
  for (Index i = 0; i < m.w_out.size(); ++i) m.w_out.data()[i] = uniform(rng);
  m.bias = VectorXr::Zero(d);
  return m;
}

inline BaeModel<double> init_model(Index d, std::uint64_t seed) {
  return init_model(d, kDefaultExpansion * d, seed);
}

/// 1 where x >= 0, else 0.
template <typename Derived>
typename Derived::PlainObject step_binarize(const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  return x.unaryExpr([](Scalar v) { return v >= Scalar(0) ? Scalar(1) : Scalar(0); });
}

template <typename Derived>
typename Derived::PlainObject logistic(const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  return x.unaryExpr([](Scalar v) { return Scalar(1) / (Scalar(1) + std::exp(-v)); });
}

/// Which derivative stands in for the step function on the backward pass.
enum class Surrogate {
  logistic,  ///< s(1-s) with s = logistic(pre)
  literal,   ///< pre (1 - pre), evaluated on the raw pre-activation
};

/// Hidden nonlinearity on the forward pass; `logistic` is the relaxed
/// (fully differentiable) mode used for gradient checks.
enum class Activation { step, logistic };

template <typename Derived>
typename Derived::PlainObject surrogate_grad_factor(const Eigen::MatrixBase<Derived>& pre,
                                                    Surrogate kind = Surrogate::logistic) {
  using Scalar = typename Derived::Scalar;
  if (kind == Surrogate::literal)
    return pre.unaryExpr([](Scalar v) { return v * (Scalar(1) - v); });
  return pre.unaryExpr([](Scalar v) {
    const Scalar s = Scalar(1) / (Scalar(1) + std::exp(-v));
    return s * (Scalar(1) - s);
  });
}

template <typename Scalar, typename Derived>
Matrix<Scalar> pre_activation(const BaeModel<Scalar>& model,
                              const Eigen::MatrixBase<Derived>& batch) {
  require_dims(batch.cols() == model.input_dim(), "batch width vs model input dim");
  Matrix<Scalar> pre(batch.rows(), model.hidden_dim());
  pre.noalias() = batch * model.w_in;
  return pre;
}

/// Binary codes for every row of `batch`.
template <typename Scalar, typename Derived>
Matrix<Scalar> encode_batch(const BaeModel<Scalar>& model,
                            const Eigen::MatrixBase<Derived>& batch) {
  return step_binarize(pre_activation(model, batch));
}

template <typename Scalar, typename Derived>
Matrix<Scalar> decode_batch(const BaeModel<Scalar>& model,
                            const Eigen::MatrixBase<Derived>& codes) {
  require_dims(codes.cols() == model.hidden_dim(), "code width vs hidden dim");
  Matrix<Scalar> out(codes.rows(), model.input_dim());
  out.noalias() = codes * model.w_out;
  out.rowwise() += model.bias.transpose();
  return out;
}

template <typename Scalar, typename Derived>
Matrix<Scalar> forward_batch(const BaeModel<Scalar>& model,
                             const Eigen::MatrixBase<Derived>& batch,
                             Activation act = Activation::step) {
  Matrix<Scalar> pre = pre_activation(model, batch);
  return decode_batch(model, act == Activation::step ? step_binarize(pre) : logistic(pre));
}

template <typename Scalar>
Vector<Scalar> encode(const BaeModel<Scalar>& model, const Vector<Scalar>& h0) {
  require_dims(h0.size() == model.input_dim(), "input length vs model input dim");
  return encode_batch(model, h0.transpose()).row(0).transpose();
}

template <typename Scalar>
Vector<Scalar> forward(const BaeModel<Scalar>& model, const Vector<Scalar>& h0) {
  require_dims(h0.size() == model.input_dim(), "input length vs model input dim");
  return forward_batch(model, h0.transpose()).row(0).transpose();
}

/// Per-term values of the training objective on one batch.
struct LossParts {
  double recon = 0;           ///< mean unsquared L2 reconstruction error
  double margin_entropy = 0;  ///< H[mean code], bits
  double covariance = 0;      ///< sum |cov_ij|, i != j
  double total = 0;           ///< recon + alpha_e * entropy + alpha_c * covariance
};

struct BackwardOptions {
  Surrogate surrogate = Surrogate::logistic;
  Activation activation = Activation::step;
  /// Skip the d'xd' covariance work when alpha_c == 0 and the value is not wanted.
  bool always_measure_covariance = true;
};

template <typename Scalar>
struct BackwardResult {
  BaeModel<Scalar> grad;
  LossParts loss;
};

/// Reconstruction-loss gradient w.r.t. the outputs: -(r/|r|)/n per row, 0 where r = 0.
template <typename Scalar>
Matrix<Scalar> unit_residual_gradient(const Matrix<Scalar>& residual, Scalar& mean_norm) {
  const Index n = residual.rows();
  Matrix<Scalar> g(residual.rows(), residual.cols());
  Scalar total = 0;
  for (Index i = 0; i < n; ++i) {
    const Scalar norm = residual.row(i).norm();
    total += norm;
    if (norm > Scalar(0))
      g.row(i) = residual.row(i) * (Scalar(-1) / (norm * static_cast<Scalar>(n)));
    else
      g.row(i).setZero();
  }
  mean_norm = total / static_cast<Scalar>(n);
  return g;
}

namespace detail {

/// Integer-valued products of {0,1} codes are exact in float while every
/// partial sum stays below 2^24.
inline bool exact_in_float(Index n, Index d_hidden) {
  return n < (Index{1} << 24) && d_hidden < (Index{1} << 24);
}

/// Covariance penalty and its code gradient for binary codes. The Gram
/// matrix and codes * sign(cov) are computed from integer counts, so the
/// signs are exact and the float GEMMs lose nothing.
template <typename Scalar>
void binary_covariance_terms(const Matrix<Scalar>& codes, Scalar grad_scale, bool want_grad,
                             double& penalty, Matrix<Scalar>& g_codes) {
  const Index n = codes.rows();
  const Index m = codes.cols();
  const Matrix<float> c = codes.template cast<float>();
  Matrix<float> gram(m, m);
  gram.noalias() = c.transpose() * c;
  Eigen::Matrix<double, Eigen::Dynamic, 1> counts(m);
  for (Index j = 0; j < m; ++j) counts(j) = gram(j, j);

  // n^2 cov_ij = n G_ij - s_i s_j, exact in double for the sizes we accept.
  const double nn = static_cast<double>(n);
  Matrix<float> sign(m, m);
  double total = 0;
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j < m; ++j) {
      const double scaled = nn * gram(i, j) - counts(i) * counts(j);
      sign(i, j) = i == j ? 0.0f : static_cast<float>((scaled > 0) - (scaled < 0));
      if (i != j) total += std::abs(scaled);
    }
  penalty = total / (nn * nn);
  if (!want_grad) return;

  // centered * sign = codes * sign - 1 (mean^T sign)
  Matrix<float> cs(n, m);
  cs.noalias() = c * sign;
  const Eigen::Matrix<double, 1, Eigen::Dynamic> offset =
      (counts.transpose() / nn) * sign.template cast<double>();
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < m; ++j)
      g_codes(i, j) += grad_scale * static_cast<Scalar>(double(cs(i, j)) - offset(j));
}

}  // namespace detail

/// Gradients of recon + alpha_e H[mean code] + alpha_c D[codes] on one batch.
/// W_out and b gradients are exact; the W_in path substitutes the surrogate for
/// the step function's derivative (exact in relaxed mode).
template <typename Scalar, typename Derived>
BackwardResult<Scalar> backward(const BaeModel<Scalar>& model,
                                const Eigen::MatrixBase<Derived>& batch,
                                const LossWeights& weights,
                                const BackwardOptions& opts = {}) {
  weights.validate();
  require_dims(batch.rows() >= 1, "empty batch");
  const Index n = batch.rows();
  const Matrix<Scalar> pre = pre_activation(model, batch);
  const Matrix<Scalar> codes =
      opts.activation == Activation::step ? step_binarize(pre) : logistic(pre);

  Matrix<Scalar> residual = batch;
  residual.noalias() -= codes * model.w_out;
  residual.rowwise() -= model.bias.transpose();

  BackwardResult<Scalar> out;
  Scalar recon = 0;
  const Matrix<Scalar> g_out = unit_residual_gradient(residual, recon);
  out.grad.w_out.noalias() = codes.transpose() * g_out;
  out.grad.bias = g_out.colwise().sum().transpose();
  Matrix<Scalar> g_codes(n, model.hidden_dim());
  g_codes.noalias() = g_out * model.w_out.transpose();

  const Vector<Scalar> mean = column_mean(codes);
  out.loss.recon = static_cast<double>(recon);
  out.loss.margin_entropy = static_cast<double>(margin_entropy(mean));
  if (weights.alpha_e > 0) {
    const Vector<Scalar> dh = margin_entropy_gradient(mean) *
                              (Scalar(weights.alpha_e) / static_cast<Scalar>(n));
    g_codes.rowwise() += dh.transpose();
  }
  if (weights.alpha_c > 0 || opts.always_measure_covariance) {
    if (opts.activation == Activation::step && detail::exact_in_float(n, codes.cols())) {
      detail::binary_covariance_terms(codes, Scalar(2 * weights.alpha_c) / static_cast<Scalar>(n),
                                      weights.alpha_c > 0, out.loss.covariance, g_codes);
    } else {
      const Matrix<Scalar> centered = codes.rowwise() - mean.transpose();
      Matrix<Scalar> cov(codes.cols(), codes.cols());
      cov.noalias() = centered.transpose() * centered;
      cov /= static_cast<Scalar>(n);
      out.loss.covariance = static_cast<double>(off_diagonal_abs_sum(cov));
      if (weights.alpha_c > 0) {
        Matrix<Scalar> sign =
            cov.unaryExpr([](Scalar v) { return Scalar((v > 0) - (v < 0)); });
        sign.diagonal().setZero();
        g_codes.noalias() +=
            (Scalar(2 * weights.alpha_c) / static_cast<Scalar>(n)) * (centered * sign);
      }
    }
  }
  out.loss.total = out.loss.recon + weights.alpha_e * out.loss.margin_entropy +
                   weights.alpha_c * out.loss.covariance;

  const Matrix<Scalar> factor = opts.activation == Activation::step
                                    ? surrogate_grad_factor(pre, opts.surrogate)
                                    : surrogate_grad_factor(pre, Surrogate::logistic);
  const Matrix<Scalar> g_pre = g_codes.cwiseProduct(factor);
  out.grad.w_in.noalias() = batch.transpose() * g_pre;
  return out;
}

}  // namespace bae

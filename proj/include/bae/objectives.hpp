#pragma once

#include "bae/entropy.hpp"
#include "bae/model.hpp"

namespace bae {

/// Mean over rows of |h0 - F(h0)|_2 (unsquared).
template <typename Scalar, typename Derived>
Scalar reconstruction_loss(const BaeModel<Scalar>& model,
                           const Eigen::MatrixBase<Derived>& batch,
                           Activation act = Activation::step) {
  if (batch.rows() < 1) throw std::invalid_argument("reconstruction_loss: empty batch");
  const Matrix<Scalar> residual = batch - forward_batch(model, batch, act);
  Scalar total = 0;
  for (Index i = 0; i < residual.rows(); ++i) total += residual.row(i).norm();
  return total / static_cast<Scalar>(batch.rows());
}

/// alpha_e * H[column mean of codes] + alpha_c * D[codes].
template <typename Derived>
typename Derived::Scalar entropy_loss(const Eigen::MatrixBase<Derived>& codes,
                                      const LossWeights& weights) {
  using Scalar = typename Derived::Scalar;
  weights.validate();
  if (codes.rows() < 1) throw std::invalid_argument("entropy_loss: empty batch");
  Scalar loss = 0;
  if (weights.alpha_e > 0) loss += Scalar(weights.alpha_e) * margin_entropy(column_mean(codes));
  if (weights.alpha_c > 0) loss += Scalar(weights.alpha_c) * covariance_penalty(codes);
  return loss;
}

template <typename Scalar, typename Derived>
LossParts loss_parts(const BaeModel<Scalar>& model, const Eigen::MatrixBase<Derived>& batch,
                     const LossWeights& weights, Activation act = Activation::step) {
  weights.validate();
  const Matrix<Scalar> pre = pre_activation(model, batch);
  const Matrix<Scalar> codes = act == Activation::step ? step_binarize(pre) : logistic(pre);
  LossParts parts;
  parts.recon = static_cast<double>(reconstruction_loss(model, batch, act));
  parts.margin_entropy = static_cast<double>(margin_entropy(column_mean(codes)));
  parts.covariance = static_cast<double>(covariance_penalty(codes));
  parts.total = parts.recon + static_cast<double>(entropy_loss(codes, weights));
  return parts;
}

/// Reconstruction loss plus the entropy-based term on the batch's codes.
/// Evaluates the true step function; never touches the surrogate.
template <typename Scalar, typename Derived>
Scalar total_loss(const BaeModel<Scalar>& model, const Eigen::MatrixBase<Derived>& batch,
                  const LossWeights& weights, Activation act = Activation::step) {
  const Matrix<Scalar> pre = pre_activation(model, batch);
  const Matrix<Scalar> codes = act == Activation::step ? step_binarize(pre) : logistic(pre);
  return reconstruction_loss(model, batch, act) + entropy_loss(codes, weights);
}

}  // namespace bae

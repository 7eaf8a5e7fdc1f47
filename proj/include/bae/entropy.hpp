#pragma once

// Entropy and covariance functionals over binary activation statistics.
// All entropies are in bits.

#include "bae/types.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace bae {

/// Weights of the entropy-based loss term.
struct LossWeights {
  double alpha_e = 1e-7;  ///< margin-entropy weight
  double alpha_c = 1e-7;  ///< off-diagonal covariance weight

  void validate() const {
    if (!(alpha_e >= 0.0) || !(alpha_c >= 0.0))
      throw std::invalid_argument("loss weights must be non-negative");
  }
};

/// Lower clamp applied to probabilities before differentiating log2.
inline constexpr double kEntropyGradFloor = 1e-12;

namespace detail {

template <typename Derived>
void check_probabilities(const Eigen::MatrixBase<Derived>& p) {
  for (Index i = 0; i < p.size(); ++i) {
    const auto v = p(i);
    if (!(v >= 0) || !(v <= 1))
      throw std::invalid_argument("probability entry " + std::to_string(i) +
                                  " outside [0,1]");
  }
}

template <typename Scalar>
Scalar xlog2x(Scalar x) {
  return x > Scalar(0) ? x * std::log2(x) : Scalar(0);
}

}  // namespace detail

/// -sum p_i log2 p_i, with 0 log 0 = 0.
template <typename Derived>
typename Derived::Scalar margin_entropy(const Eigen::MatrixBase<Derived>& p) {
  using Scalar = typename Derived::Scalar;
  detail::check_probabilities(p);
  Scalar h = 0;
  for (Index i = 0; i < p.size(); ++i) h -= detail::xlog2x(p(i));
  return h == Scalar(0) ? Scalar(0) : h;
}

/// Sum of per-channel binary entropies -p log2 p - (1-p) log2 (1-p).
template <typename Derived>
typename Derived::Scalar bernoulli_entropy(const Eigen::MatrixBase<Derived>& p) {
  using Scalar = typename Derived::Scalar;
  detail::check_probabilities(p);
  Scalar h = 0;
  for (Index i = 0; i < p.size(); ++i)
    h -= detail::xlog2x(p(i)) + detail::xlog2x(Scalar(1) - p(i));
  return h == Scalar(0) ? Scalar(0) : h;
}

/// d/dp of margin_entropy, with p clamped to [1e-12, 1] first.
template <typename Derived>
Vector<typename Derived::Scalar> margin_entropy_gradient(
    const Eigen::MatrixBase<Derived>& p) {
  using Scalar = typename Derived::Scalar;
  const Scalar inv_ln2 = Scalar(1) / std::numbers::ln2_v<Scalar>;
  Vector<Scalar> g(p.size());
  for (Index i = 0; i < p.size(); ++i) {
    const Scalar q = std::clamp<Scalar>(p(i), Scalar(kEntropyGradFloor), Scalar(1));
    g(i) = -(std::log2(q) + inv_ln2);
  }
  return g;
}

/// Column means of a code matrix.
template <typename Derived>
Vector<typename Derived::Scalar> column_mean(const Eigen::MatrixBase<Derived>& codes) {
  if (codes.rows() < 1) throw std::invalid_argument("empty code matrix");
  return codes.colwise().mean().transpose();
}

/// Population covariance (divide by n) of the columns of `codes`.
template <typename Derived>
Matrix<typename Derived::Scalar> population_covariance(
    const Eigen::MatrixBase<Derived>& codes) {
  using Scalar = typename Derived::Scalar;
  const Vector<Scalar> mean = column_mean(codes);
  const Matrix<Scalar> centered = codes.rowwise() - mean.transpose();
  Matrix<Scalar> cov = centered.transpose() * centered;
  cov /= static_cast<Scalar>(codes.rows());
  return cov;
}

template <typename Scalar>
Scalar off_diagonal_abs_sum(const Matrix<Scalar>& m) {
  Scalar total = 0;
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j)
      if (i != j) total += std::abs(m(i, j));
  return total;
}

/// Sum of |cov_ij| over i != j.
template <typename Derived>
typename Derived::Scalar covariance_penalty(const Eigen::MatrixBase<Derived>& codes) {
  return off_diagonal_abs_sum(population_covariance(codes));
}

/// d(covariance_penalty)/d(codes), using sign(0) = 0.
template <typename Derived>
Matrix<typename Derived::Scalar> covariance_penalty_gradient(
    const Eigen::MatrixBase<Derived>& codes) {
  using Scalar = typename Derived::Scalar;
  const Index n = codes.rows();
  const Vector<Scalar> mean = column_mean(codes);
  const Matrix<Scalar> centered = codes.rowwise() - mean.transpose();
  Matrix<Scalar> sign = (centered.transpose() * centered).unaryExpr([](Scalar v) {
    return Scalar((v > 0) - (v < 0));
  });
  sign.diagonal().setZero();
  Matrix<Scalar> grad = centered * sign;
  grad *= Scalar(2) / static_cast<Scalar>(n);
  return grad;
}

}  // namespace bae

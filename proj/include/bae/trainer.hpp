#pragma once

#include "bae/data_io.hpp"
#include "bae/entropy.hpp"
#include "bae/entropy_probe.hpp"
#include "bae/model.hpp"
#include "bae/trace.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>

namespace bae {

struct AdamOptions {
  double learning_rate = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Bias-corrected Adam on one tensor; `t` is the 1-based step count.
template <typename P, typename G>
void adam_update(Eigen::PlainObjectBase<P>& param, const Eigen::MatrixBase<G>& grad,
                 Eigen::PlainObjectBase<P>& m, Eigen::PlainObjectBase<P>& v, std::uint64_t t,
                 const AdamOptions& opts) {
  using Scalar = typename P::Scalar;
  require_dims(param.rows() == grad.rows() && param.cols() == grad.cols(),
               "adam: gradient shape");
  const auto b1 = static_cast<Scalar>(opts.beta1);
  const auto b2 = static_cast<Scalar>(opts.beta2);
  const Scalar c1 = Scalar(1) - static_cast<Scalar>(std::pow(opts.beta1, double(t)));
  const Scalar c2 = Scalar(1) - static_cast<Scalar>(std::pow(opts.beta2, double(t)));
  const auto lr = static_cast<Scalar>(opts.learning_rate);
  const auto eps = static_cast<Scalar>(opts.epsilon);
  m.array() = b1 * m.array() + (Scalar(1) - b1) * grad.array();
  v.array() = b2 * v.array() + (Scalar(1) - b2) * grad.array().square();
  param.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
}

template <typename Scalar>
struct AdamState {
  BaeModel<Scalar> m;
  BaeModel<Scalar> v;
  std::uint64_t t = 0;

  static AdamState zeros_for(const BaeModel<Scalar>& params) {
    return {zeros_like(params), zeros_like(params), 0};
  }
};

template <typename Scalar>
void adam_step(AdamState<Scalar>& state, BaeModel<Scalar>& params,
               const BaeModel<Scalar>& grads, const AdamOptions& opts) {
  require_dims(state.m.w_in.rows() == params.w_in.rows() &&
                   state.m.w_in.cols() == params.w_in.cols() &&
                   state.m.w_out.rows() == params.w_out.rows() &&
                   state.m.bias.size() == params.bias.size(),
               "adam: state shape");
  ++state.t;
  adam_update(params.w_in, grads.w_in, state.m.w_in, state.v.w_in, state.t, opts);
  adam_update(params.w_out, grads.w_out, state.m.w_out, state.v.w_out, state.t, opts);
  adam_update(params.bias, grads.bias, state.m.bias, state.v.bias, state.t, opts);
}

struct TrainConfig {
  std::int64_t epochs = 2000;
  std::int64_t warmup_epochs = 500;  ///< entropy weights held at zero for these epochs
  std::int64_t batch_size = 512;
  double learning_rate = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  LossWeights weights{};
  /// When false only alpha_e is zeroed during warm-up.
  bool warmup_zeroes_covariance = true;
  std::uint64_t shuffle_seed = 0;
  std::int64_t d_hidden = 0;  ///< 0 selects 4 * d
  Surrogate surrogate = Surrogate::logistic;
  /// Record the covariance penalty in the trace even when alpha_c is zero.
  bool trace_covariance = true;

  AdamOptions adam() const { return {learning_rate, beta1, beta2, epsilon}; }
  LossWeights weights_at_epoch(std::int64_t epoch) const;
  void validate() const;

  nlohmann::json to_json() const;
  /// Missing fields keep their defaults; unknown fields are rejected.
  static TrainConfig from_json(const nlohmann::json& j);
  /// Shorter schedule used for the sparse-autoencoder comparisons: 200 epochs, 50 warm-up.
  static TrainConfig comparison_schedule();
};

class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(std::uint64_t step, const std::string& what)
      : std::runtime_error("non-finite loss at step " + std::to_string(step) + ": " + what),
        step_(step) {}
  std::uint64_t step() const { return step_; }

 private:
  std::uint64_t step_;
};

struct EpochSummary {
  std::int64_t epoch = 0;
  double mean_recon = 0;
  double mean_margin_entropy = 0;
};
using EpochCallback = std::function<void(const EpochSummary&, const BaeModel<double>& params)>;

struct TrainResult {
  BaeModel<double> model;
  Checkpoint checkpoint;
  TrainTrace trace;
};

/// Minibatch Adam on recon + entropy objective. Deterministic in
/// (config.shuffle_seed, model_seed).
TrainResult train(const TrainConfig& config, const HiddenStateSet& dataset,
                  std::uint64_t model_seed, const EpochCallback& on_epoch = {});

struct EvalMetrics {
  double recon_loss = 0;
  double entropy_bits = 0;  ///< value of the requested estimator
  double entropy_bits_bernoulli = 0;
  double entropy_bits_eq4 = 0;
};

EvalMetrics evaluate(const BaeModel<double>& model, const HiddenStateSet& dataset,
                     Estimator estimator = Estimator::bernoulli);

namespace detail {

/// Batch gradient callback used by the shared optimisation loop.
using BatchGradient = std::function<BackwardResult<double>(
    const BaeModel<double>& params, std::span<const Index> rows, const LossWeights& weights)>;

/// Runs epochs of shuffled minibatch Adam over `n` samples. Incomplete last
/// batches are kept.
TrainTrace optimize(const TrainConfig& config, Index n, BaeModel<double>& params,
                    const BatchGradient& gradient, const EpochCallback& on_epoch = {});

MatrixXr gather_rows(const MatrixXr& source, std::span<const Index> rows);

}  // namespace detail

}  // namespace bae

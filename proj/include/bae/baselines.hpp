#pragma once

// Sparse-autoencoder baselines sharing the BAE trainer: ReLU SAE, Top-k SAE,
// thresholded ("gated") ReLU SAE and a transcoder on paired states.

#include "bae/data_io.hpp"
#include "bae/model.hpp"
#include "bae/trainer.hpp"

#include <json.hpp>

#include <string>

namespace bae {

enum class BaselineKind { relu_sae, topk_sae, gated_sae, transcoder };

std::string to_string(BaselineKind kind);
BaselineKind parse_baseline_kind(const std::string& name);

struct BaselineParams {
  double alpha = 1e-7;  ///< L1 weight (ignored by topk_sae)
  Index k = 15;         ///< top-k width
  double gamma = 0.5;   ///< gate threshold

  void validate() const;
};

/// Weights reuse the BAE layout: w_in d_in x d', w_out d' x d_out, bias d_out.
struct BaselineModel {
  BaselineKind kind = BaselineKind::relu_sae;
  BaeModel<double> weights;
  BaselineParams params;

  Index input_dim() const { return weights.w_in.rows(); }
  Index hidden_dim() const { return weights.w_in.cols(); }
  Index output_dim() const { return weights.w_out.cols(); }
  void validate() const;
};

/// Glorot-range init identical to init_model, with an independent output width.
BaselineModel init_baseline(BaselineKind kind, Index d_in, Index d_hidden, Index d_out,
                            std::uint64_t seed, const BaselineParams& params = {});

/// Kind-specific activation of a pre-activation matrix (rows = samples).
MatrixXr baseline_activation(BaselineKind kind, const BaselineParams& params,
                             const MatrixXr& pre);

MatrixXr baseline_encode_batch(const BaselineModel& model, const MatrixXr& batch);
VectorXr baseline_encode(const BaselineModel& model, const VectorXr& h0);
MatrixXr baseline_forward_batch(const BaselineModel& model, const MatrixXr& batch);

/// Mean L2 error against `targets` plus alpha * sum of |activation|_1 over the
/// batch (no L1 term for topk_sae).
double baseline_loss(const BaselineModel& model, const MatrixXr& inputs, const MatrixXr& targets);
double baseline_loss(const BaselineModel& model, const HiddenStateSet& batch);
double baseline_loss(const BaselineModel& model, const PairedStateSet& batch);

/// Gradient of baseline_loss. `loss.margin_entropy` carries H of the batch
/// activity fraction so baseline traces stay comparable; covariance is 0.
BackwardResult<double> baseline_backward(const BaselineModel& model, const MatrixXr& inputs,
                                         const MatrixXr& targets);

struct BaselineTrainResult {
  BaselineModel model;
  Checkpoint checkpoint;
  TrainTrace trace;
};

/// Trains a non-transcoder baseline on its own inputs.
BaselineTrainResult train_baseline(BaselineKind kind, const TrainConfig& config,
                                   const HiddenStateSet& dataset, std::uint64_t model_seed,
                                   const BaselineParams& params = {},
                                   const EpochCallback& on_epoch = {});
/// Trains a transcoder from inputs to targets.
BaselineTrainResult train_transcoder(const TrainConfig& config, const PairedStateSet& dataset,
                                     std::uint64_t model_seed, const BaselineParams& params = {},
                                     const EpochCallback& on_epoch = {});

/// Raw activations over a set, optionally standardised per channel.
MatrixXr baseline_magnitudes(const BaselineModel& model, const HiddenStateSet& set,
                             bool rescaled);

/// Fraction of samples with a non-zero activation per channel.
VectorXr activity_fraction(const BaselineModel& model, const HiddenStateSet& set);

/// BAEC container with {"kind": ..., "alpha", "k", "gamma"} in the config blob.
/// The container stores one width for inputs and outputs, so transcoders
/// must have d_in == d_out to be saved.
Checkpoint baseline_checkpoint(const BaselineModel& model, const VectorXr& activity,
                               nlohmann::json extra = nlohmann::json::object());
BaselineModel baseline_from_checkpoint(const Checkpoint& ckpt);

/// "bae" or a baseline kind name read from a checkpoint's config blob.
std::string checkpoint_kind(const Checkpoint& ckpt);

}  // namespace bae

#include "bae/baselines.hpp"

#include "bae/features.hpp"

#include <cmath>

namespace bae {

std::string to_string(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::relu_sae: return "relu_sae";
    case BaselineKind::topk_sae: return "topk_sae";
    case BaselineKind::gated_sae: return "gated_sae";
    case BaselineKind::transcoder: return "transcoder";
  }
  throw std::logic_error("bad baseline kind");
}

BaselineKind parse_baseline_kind(const std::string& name) {
  for (auto k : {BaselineKind::relu_sae, BaselineKind::topk_sae, BaselineKind::gated_sae,
                 BaselineKind::transcoder})
    if (to_string(k) == name) return k;
  throw std::invalid_argument("unknown baseline kind '" + name + "'");
}

void BaselineParams::validate() const {
  if (!(alpha >= 0) || !std::isfinite(alpha)) throw std::invalid_argument("alpha must be >= 0");
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  if (!std::isfinite(gamma)) throw std::invalid_argument("gamma must be finite");
}

void BaselineModel::validate() const {
  params.validate();
  const auto& w = weights;
  require_dims(input_dim() >= 1 && hidden_dim() >= 1 && output_dim() >= 1, "empty model");
  require_dims(w.w_out.rows() == hidden_dim(), "W_out rows vs hidden dim");
  require_dims(w.bias.size() == output_dim(), "bias length vs output dim");
  if (kind == BaselineKind::topk_sae && params.k > hidden_dim())
    throw std::invalid_argument("k exceeds hidden dim");
  if (!w.w_in.allFinite() || !w.w_out.allFinite() || !w.bias.allFinite())
    throw std::invalid_argument("model parameters must be finite");
}

BaselineModel init_baseline(BaselineKind kind, Index d_in, Index d_hidden, Index d_out,
                            std::uint64_t seed, const BaselineParams& params) {
  if (d_in < 1 || d_hidden < 1 || d_out < 1)
    throw std::invalid_argument("init_baseline: dims must be >= 1");
  std::mt19937_64 rng(seed);
  const double limit = std::sqrt(6.0 / static_cast<double>(d_in + d_hidden));
  std::uniform_real_distribution<double> uniform(-limit, limit);
  BaselineModel m{kind, {}, params};
  m.weights.w_in.resize(d_in, d_hidden);
  m.weights.w_out.resize(d_hidden, d_out);
  for (Index i = 0; i < m.weights.w_in.size(); ++i) m.weights.w_in.data()[i] = uniform(rng);
  for (Index i = 0; i < m.weights.w_out.size(); ++i) m.weights.w_out.data()[i] = uniform(rng);
  m.weights.bias = VectorXr::Zero(d_out);
  m.validate();
  return m;
}

MatrixXr baseline_activation(BaselineKind kind, const BaselineParams& params,
                             const MatrixXr& pre) {
  switch (kind) {
    case BaselineKind::relu_sae:
    case BaselineKind::transcoder:
      return pre.cwiseMax(0.0);
    case BaselineKind::gated_sae: {
      const double g = params.gamma;
      return pre.unaryExpr([g](double x) { return x > g ? x : 0.0; });
    }
    case BaselineKind::topk_sae: {
      if (params.k > pre.cols()) throw std::invalid_argument("k exceeds hidden dim");
      MatrixXr out = MatrixXr::Zero(pre.rows(), pre.cols());
      for (Index i = 0; i < pre.rows(); ++i)
        for (Index j : significant_channels(pre.row(i).transpose(), params.k))
          out(i, j) = std::max(pre(i, j), 0.0);
      return out;
    }
  }
  throw std::logic_error("bad baseline kind");
}

MatrixXr baseline_encode_batch(const BaselineModel& model, const MatrixXr& batch) {
  require_dims(batch.cols() == model.input_dim(), "batch width vs model input dim");
  MatrixXr pre(batch.rows(), model.hidden_dim());
  pre.noalias() = batch * model.weights.w_in;
  return baseline_activation(model.kind, model.params, pre);
}

VectorXr baseline_encode(const BaselineModel& model, const VectorXr& h0) {
  return baseline_encode_batch(model, h0.transpose()).row(0).transpose();
}

MatrixXr baseline_forward_batch(const BaselineModel& model, const MatrixXr& batch) {
  const MatrixXr act = baseline_encode_batch(model, batch);
  MatrixXr out(batch.rows(), model.output_dim());
  out.noalias() = act * model.weights.w_out;
  out.rowwise() += model.weights.bias.transpose();
  return out;
}

namespace {

bool uses_l1(BaselineKind kind) { return kind != BaselineKind::topk_sae; }

double activity_entropy(const MatrixXr& act) {
  const VectorXr p = (act.array() != 0.0).cast<double>().colwise().mean().transpose();
  return margin_entropy(p);
}

}  // namespace

double baseline_loss(const BaselineModel& model, const MatrixXr& inputs,
                     const MatrixXr& targets) {
  return baseline_backward(model, inputs, targets).loss.total;
}

double baseline_loss(const BaselineModel& model, const HiddenStateSet& batch) {
  if (model.kind == BaselineKind::transcoder)
    throw std::invalid_argument("transcoder loss needs a paired set");
  return baseline_loss(model, batch.rows, batch.rows);
}

double baseline_loss(const BaselineModel& model, const PairedStateSet& batch) {
  if (model.kind != BaselineKind::transcoder)
    throw std::invalid_argument(to_string(model.kind) + " trains on unpaired sets");
  return baseline_loss(model, batch.inputs.rows, batch.targets.rows);
}

BackwardResult<double> baseline_backward(const BaselineModel& model, const MatrixXr& inputs,
                                         const MatrixXr& targets) {
  require_dims(inputs.rows() >= 1, "empty batch");
  require_dims(inputs.rows() == targets.rows(), "input vs target row count");
  require_dims(targets.cols() == model.output_dim(), "target width vs output dim");
  const Index n = inputs.rows();
  const auto& w = model.weights;

  MatrixXr pre = inputs * w.w_in;
  const MatrixXr act = baseline_activation(model.kind, model.params, pre);
  MatrixXr residual = targets;
  residual.noalias() -= act * w.w_out;
  residual.rowwise() -= w.bias.transpose();

  BackwardResult<double> out;
  double recon = 0;
  const MatrixXr g_out = unit_residual_gradient(residual, recon);
  out.grad.w_out.noalias() = act.transpose() * g_out;
  out.grad.bias = g_out.colwise().sum().transpose();
  MatrixXr g_act = g_out * w.w_out.transpose();

  double l1 = 0;
  if (uses_l1(model.kind)) {
    l1 = act.cwiseAbs().sum();
    if (model.params.alpha > 0)
      g_act += model.params.alpha * act.unaryExpr([](double a) { return double((a > 0) - (a < 0)); });
  }
  // Every activation is the identity on its support and zero elsewhere.
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < act.cols(); ++j)
      if (act(i, j) == 0.0) g_act(i, j) = 0.0;
  out.grad.w_in.noalias() = inputs.transpose() * g_act;

  out.loss.recon = recon;
  out.loss.margin_entropy = activity_entropy(act);
  out.loss.covariance = 0;
  out.loss.total = recon + (uses_l1(model.kind) ? model.params.alpha * l1 : 0.0);
  return out;
}

namespace {

BaselineTrainResult run_training(BaselineModel model, const TrainConfig& config,
                                 const MatrixXr& inputs, const MatrixXr& targets,
                                 const EpochCallback& on_epoch) {
  BaselineTrainResult result;
  result.trace = detail::optimize(
      config, inputs.rows(), model.weights,
      [&](const BaeModel<double>& params, std::span<const Index> rows, const LossWeights&) {
        BaselineModel view{model.kind, params, model.params};
        return baseline_backward(view, detail::gather_rows(inputs, rows),
                                 detail::gather_rows(targets, rows));
      },
      on_epoch);
  result.model = std::move(model);
  return result;
}

}  // namespace

BaselineTrainResult train_baseline(BaselineKind kind, const TrainConfig& config,
                                   const HiddenStateSet& dataset, std::uint64_t model_seed,
                                   const BaselineParams& params, const EpochCallback& on_epoch) {
  if (kind == BaselineKind::transcoder)
    throw std::invalid_argument("use train_transcoder for paired data");
  config.validate();
  dataset.validate();
  const Index d = dataset.d();
  const Index dh = config.d_hidden > 0 ? config.d_hidden : kDefaultExpansion * d;
  auto result = run_training(init_baseline(kind, d, dh, d, model_seed, params), config,
                             dataset.rows, dataset.rows, on_epoch);
  result.checkpoint = baseline_checkpoint(
      result.model, activity_fraction(result.model, dataset),
      {{"model_seed", model_seed}, {"train", config.to_json()}});
  return result;
}

BaselineTrainResult train_transcoder(const TrainConfig& config, const PairedStateSet& dataset,
                                     std::uint64_t model_seed, const BaselineParams& params,
                                     const EpochCallback& on_epoch) {
  config.validate();
  dataset.validate();
  const Index d = dataset.inputs.d();
  const Index dh = config.d_hidden > 0 ? config.d_hidden : kDefaultExpansion * d;
  auto result = run_training(
      init_baseline(BaselineKind::transcoder, d, dh, dataset.targets.d(), model_seed, params),
      config, dataset.inputs.rows, dataset.targets.rows, on_epoch);
  if (result.model.output_dim() == result.model.input_dim())
    result.checkpoint = baseline_checkpoint(
        result.model, activity_fraction(result.model, dataset.inputs),
        {{"model_seed", model_seed}, {"train", config.to_json()}});
  return result;
}

MatrixXr baseline_magnitudes(const BaselineModel& model, const HiddenStateSet& set,
                             bool rescaled) {
  if (set.n() < 1) throw std::invalid_argument("baseline_magnitudes: empty set");
  const MatrixXr act = baseline_encode_batch(model, set.rows);
  return rescaled ? rescale_activations(act) : act;
}

VectorXr activity_fraction(const BaselineModel& model, const HiddenStateSet& set) {
  if (set.n() < 1) throw std::invalid_argument("activity_fraction: empty set");
  const MatrixXr act = baseline_encode_batch(model, set.rows);
  return (act.array() != 0.0).cast<double>().colwise().mean().transpose();
}

Checkpoint baseline_checkpoint(const BaselineModel& model, const VectorXr& activity,
                               nlohmann::json extra) {
  model.validate();
  if (model.output_dim() != model.input_dim())
    throw std::invalid_argument("checkpoint container needs d_in == d_out");
  Checkpoint ckpt;
  ckpt.model = model.weights;
  ckpt.mean_activation = activity;
  ckpt.config = std::move(extra);
  ckpt.config["kind"] = to_string(model.kind);
  ckpt.config["alpha"] = model.params.alpha;
  ckpt.config["k"] = model.params.k;
  ckpt.config["gamma"] = model.params.gamma;
  ckpt.validate();
  return ckpt;
}

std::string checkpoint_kind(const Checkpoint& ckpt) {
  if (!ckpt.config.is_object() || !ckpt.config.contains("kind")) return "bae";
  return ckpt.config.at("kind").get<std::string>();
}

BaselineModel baseline_from_checkpoint(const Checkpoint& ckpt) {
  const std::string kind = checkpoint_kind(ckpt);
  if (kind == "bae") throw std::invalid_argument("checkpoint holds a BAE, not a baseline");
  BaselineModel m;
  m.kind = parse_baseline_kind(kind);
  m.weights = ckpt.model;
  const auto& c = ckpt.config;
  if (c.contains("alpha")) m.params.alpha = c.at("alpha").get<double>();
  if (c.contains("k")) m.params.k = c.at("k").get<Index>();
  if (c.contains("gamma")) m.params.gamma = c.at("gamma").get<double>();
  m.validate();
  return m;
}

}  // namespace bae

#include "bae/trainer.hpp"

#include "bae/objectives.hpp"

#include <algorithm>
#include <numeric>
#include <random>

namespace bae {

namespace {

const char* surrogate_name(Surrogate s) {
  return s == Surrogate::logistic ? "logistic" : "literal";
}

Surrogate parse_surrogate(const std::string& s) {
  if (s == "logistic") return Surrogate::logistic;
  if (s == "literal") return Surrogate::literal;
  throw std::invalid_argument("unknown surrogate '" + s + "'");
}

}  // namespace

LossWeights TrainConfig::weights_at_epoch(std::int64_t epoch) const {
  if (epoch >= warmup_epochs) return weights;
  LossWeights w = weights;
  w.alpha_e = 0;
  if (warmup_zeroes_covariance) w.alpha_c = 0;
  return w;
}

void TrainConfig::validate() const {
  if (epochs < 0) throw std::invalid_argument("epochs must be >= 0");
  if (warmup_epochs < 0 || warmup_epochs > epochs)
    throw std::invalid_argument("warmup_epochs must lie in [0, epochs]");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (!(learning_rate > 0)) throw std::invalid_argument("learning_rate must be > 0");
  if (!(beta1 >= 0 && beta1 < 1) || !(beta2 >= 0 && beta2 < 1))
    throw std::invalid_argument("Adam betas must lie in [0, 1)");
  if (!(epsilon > 0)) throw std::invalid_argument("epsilon must be > 0");
  if (d_hidden < 0) throw std::invalid_argument("d_hidden must be >= 0");
  weights.validate();
}

nlohmann::json TrainConfig::to_json() const {
  return {{"epochs", epochs},
          {"warmup_epochs", warmup_epochs},
          {"batch_size", batch_size},
          {"learning_rate", learning_rate},
          {"beta1", beta1},
          {"beta2", beta2},
          {"epsilon", epsilon},
          {"alpha_e", weights.alpha_e},
          {"alpha_c", weights.alpha_c},
          {"warmup_zeroes_covariance", warmup_zeroes_covariance},
          {"shuffle_seed", shuffle_seed},
          {"d_hidden", d_hidden},
          {"surrogate", surrogate_name(surrogate)},
          {"trace_covariance", trace_covariance}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw std::invalid_argument("train config must be a JSON object");
  TrainConfig c;
  for (const auto& [key, value] : j.items()) {
    if (key == "epochs") c.epochs = value.get<std::int64_t>();
    else if (key == "warmup_epochs") c.warmup_epochs = value.get<std::int64_t>();
    else if (key == "batch_size") c.batch_size = value.get<std::int64_t>();
    else if (key == "learning_rate") c.learning_rate = value.get<double>();
    else if (key == "beta1") c.beta1 = value.get<double>();
    else if (key == "beta2") c.beta2 = value.get<double>();
    else if (key == "epsilon") c.epsilon = value.get<double>();
    else if (key == "alpha_e") c.weights.alpha_e = value.get<double>();
    else if (key == "alpha_c") c.weights.alpha_c = value.get<double>();
    else if (key == "warmup_zeroes_covariance") c.warmup_zeroes_covariance = value.get<bool>();
    else if (key == "shuffle_seed") c.shuffle_seed = value.get<std::uint64_t>();
    else if (key == "d_hidden") c.d_hidden = value.get<std::int64_t>();
    else if (key == "surrogate") c.surrogate = parse_surrogate(value.get<std::string>());
    else if (key == "trace_covariance") c.trace_covariance = value.get<bool>();
    else throw std::invalid_argument("unknown train config field '" + key + "'");
  }
  c.validate();
  return c;
}

TrainConfig TrainConfig::comparison_schedule() {
  TrainConfig c;
  c.epochs = 200;
  c.warmup_epochs = 50;
  return c;
}

namespace detail {

MatrixXr gather_rows(const MatrixXr& source, std::span<const Index> rows) {
  MatrixXr out(static_cast<Index>(rows.size()), source.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Index>(i)) = source.row(rows[i]);
  return out;
}

TrainTrace optimize(const TrainConfig& config, Index n, BaeModel<double>& params,
                    const BatchGradient& gradient, const EpochCallback& on_epoch) {
  config.validate();
  if (n < 1) throw std::invalid_argument("training set is empty");
  std::mt19937_64 shuffle_rng(config.shuffle_seed);
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});

  auto adam = AdamState<double>::zeros_for(params);
  const AdamOptions adam_opts = config.adam();
  const auto batch = static_cast<std::size_t>(config.batch_size);
  TrainTrace trace;

  for (std::int64_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    const LossWeights weights = config.weights_at_epoch(epoch);
    EpochSummary summary{epoch, 0, 0};
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t len = std::min(batch, order.size() - start);
      const std::span<const Index> rows(order.data() + start, len);
      BackwardResult<double> step = gradient(params, rows, weights);
      const std::uint64_t index = adam.t;
      if (!std::isfinite(step.loss.total))
        throw TrainingDiverged(index, "loss = " + std::to_string(step.loss.total));
      if (!step.grad.w_in.allFinite() || !step.grad.w_out.allFinite() ||
          !step.grad.bias.allFinite())
        throw TrainingDiverged(index, "non-finite gradient");
      adam_step(adam, params, step.grad, adam_opts);
      trace.push_back({index, step.loss.recon, step.loss.margin_entropy, step.loss.covariance});
      summary.mean_recon += step.loss.recon;
      summary.mean_margin_entropy += step.loss.margin_entropy;
      ++batches;
    }
    if (on_epoch) {
      summary.mean_recon /= static_cast<double>(batches);
      summary.mean_margin_entropy /= static_cast<double>(batches);
      on_epoch(summary, params);
    }
  }
  return trace;
}

}  // namespace detail

TrainResult train(const TrainConfig& config, const HiddenStateSet& dataset,
                  std::uint64_t model_seed, const EpochCallback& on_epoch) {
  config.validate();
  dataset.validate();
  const Index d = dataset.d();
  const Index d_hidden = config.d_hidden > 0 ? config.d_hidden : kDefaultExpansion * d;

  TrainResult result;
  result.model = init_model(d, d_hidden, model_seed);
  BackwardOptions opts;
  opts.surrogate = config.surrogate;
  opts.always_measure_covariance = config.trace_covariance;

  result.trace = detail::optimize(
      config, dataset.n(), result.model,
      [&](const BaeModel<double>& params, std::span<const Index> rows, const LossWeights& w) {
        return backward(params, detail::gather_rows(dataset.rows, rows), w, opts);
      },
      on_epoch);

  result.checkpoint.model = result.model;
  result.checkpoint.mean_activation = mean_activation(result.model, dataset);
  result.checkpoint.config = {{"kind", "bae"},
                              {"model_seed", model_seed},
                              {"train", config.to_json()}};
  return result;
}

EvalMetrics evaluate(const BaeModel<double>& model, const HiddenStateSet& dataset,
                     Estimator estimator) {
  dataset.validate();
  require_dims(dataset.d() == model.input_dim(), "dataset width vs model input dim");
  EvalMetrics m;
  m.recon_loss = reconstruction_loss(model, dataset.rows);
  const VectorXr p = mean_activation(model, dataset);
  m.entropy_bits_bernoulli = bernoulli_entropy(p);
  m.entropy_bits_eq4 = margin_entropy(p);
  m.entropy_bits = estimator == Estimator::bernoulli ? m.entropy_bits_bernoulli
                                                     : m.entropy_bits_eq4;
  return m;
}

}  // namespace bae

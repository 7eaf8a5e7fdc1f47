#include "cli.hpp"

#include "bae/baselines.hpp"
#include "bae/comsem.hpp"
#include "bae/compression.hpp"
#include "bae/data_io.hpp"
#include "bae/detail/bytes.hpp"
#include "bae/entropy_probe.hpp"
#include "bae/features.hpp"
#include "bae/synthetic.hpp"
#include "bae/trainer.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <optional>
#include <ostream>

namespace bae::cli {

namespace {

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

void write_json_file(const nlohmann::json& j, const std::string& path) {
  const std::string text = j.dump(2) + "\n";
  detail::write_file(path, {text.begin(), text.end()});
}

/// Training flags shared by `train` and `sweep`; unset flags leave the
/// config file (or preset) untouched.
struct TrainFlags {
  std::string config_path;
  std::string schedule;
  std::optional<std::int64_t> epochs, warmup, batch, d_hidden;
  std::optional<double> lr, alpha_e, alpha_c;
  std::optional<bool> warmup_covariance;

  void add(CLI::App* app) {
    app->add_option("--config", config_path, "TrainConfig JSON file")->check(CLI::ExistingFile);
    app->add_option("--schedule", schedule, "preset: default (2000/500) or comparison (200/50)")
        ->check(CLI::IsMember({"default", "comparison"}));
    app->add_option("--epochs", epochs);
    app->add_option("--warmup", warmup, "epochs with the entropy weights held at zero");
    app->add_option("--batch-size", batch);
    app->add_option("--d-hidden", d_hidden, "hidden width (default 4d)");
    app->add_option("--lr", lr);
    app->add_option("--alpha-e", alpha_e);
    app->add_option("--alpha-c", alpha_c);
    app->add_option("--warmup-zeroes-covariance", warmup_covariance);
  }

  TrainConfig resolve(bool comparison_default, std::optional<std::uint64_t> seed) const {
    const std::string preset = schedule.empty() ? (comparison_default ? "comparison" : "default")
                                                : schedule;
    TrainConfig c = preset == "comparison" ? TrainConfig::comparison_schedule() : TrainConfig{};
    if (!config_path.empty()) {
      nlohmann::json merged = c.to_json();
      merged.update(read_json_file(config_path));
      c = TrainConfig::from_json(merged);
    }
    if (epochs) c.epochs = *epochs;
    if (warmup) c.warmup_epochs = *warmup;
    if (batch) c.batch_size = *batch;
    if (d_hidden) c.d_hidden = *d_hidden;
    if (lr) c.learning_rate = *lr;
    if (alpha_e) c.weights.alpha_e = *alpha_e;
    if (alpha_c) c.weights.alpha_c = *alpha_c;
    if (warmup_covariance) c.warmup_zeroes_covariance = *warmup_covariance;
    if (seed) c.shuffle_seed = *seed;
    c.validate();
    return c;
  }
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

VectorXr choose_prior(const Checkpoint& ckpt, const HiddenStateSet* data, const std::string& mode) {
  if (mode == "stored") return ckpt.mean_activation;
  if (!data) throw std::invalid_argument("--prior data needs a dataset");
  if (checkpoint_kind(ckpt) != "bae") return activity_fraction(baseline_from_checkpoint(ckpt), *data);
  return mean_activation(ckpt.model, *data);
}

void require_bae(const Checkpoint& ckpt, const char* what) {
  if (checkpoint_kind(ckpt) != "bae")
    throw std::invalid_argument(std::string(what) + " needs a BAE checkpoint, got " +
                                checkpoint_kind(ckpt));
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Binary autoencoder toolkit"};
  app.require_subcommand(1);
  std::optional<std::uint64_t> seed;
  unsigned jobs = 1;
  app.add_option("--seed", seed, "seed for every random choice")->capture_default_str();
  app.add_option("--jobs", jobs, "worker cap")->check(CLI::PositiveNumber);

  // synth-gen
  auto* synth = app.add_subcommand("synth-gen", "generate a rank-r directional dataset");
  Index s_d = 256, s_rank = 8, s_n = 16384;
  std::string s_out;
  synth->add_option("--d", s_d)->check(CLI::PositiveNumber);
  synth->add_option("--rank", s_rank)->check(CLI::NonNegativeNumber);
  synth->add_option("--n", s_n)->check(CLI::PositiveNumber);
  synth->add_option("--out", s_out, "dataset path (.baeh); a .json sidecar is written next to it")->required();
  synth->add_option("--seed", seed);

  // train
  auto* train_cmd = app.add_subcommand("train", "train a BAE or a baseline");
  std::string t_data, t_out, t_trace, t_kind = "bae";
  TrainFlags t_flags;
  std::optional<double> b_alpha, b_gamma;
  std::optional<Index> b_k;
  train_cmd->add_option("--data", t_data, "dataset (.baeh), or paired set (.baep) for transcoder")
      ->required()
      ->check(CLI::ExistingFile);
  train_cmd->add_option("--out", t_out, "checkpoint path (.baec)")->required();
  train_cmd->add_option("--trace", t_trace, "per-step trace CSV");
  train_cmd->add_option("--model-kind", t_kind)
      ->check(CLI::IsMember({"bae", "relu_sae", "topk_sae", "gated_sae", "transcoder"}));
  train_cmd->add_option("--alpha", b_alpha, "baseline L1 weight");
  train_cmd->add_option("--k", b_k, "top-k width (topk_sae)");
  train_cmd->add_option("--gamma", b_gamma, "gate threshold (gated_sae)");
  train_cmd->add_option("--seed", seed);
  t_flags.add(train_cmd);

  // entropy
  auto* entropy_cmd = app.add_subcommand("entropy", "estimate the entropy of a set");
  std::string e_model, e_data, e_out;
  entropy_cmd->add_option("--model", e_model)->required()->check(CLI::ExistingFile);
  entropy_cmd->add_option("--data", e_data)->required()->check(CLI::ExistingFile);
  entropy_cmd->add_option("--out", e_out, "optional JSON report");

  // sweep
  auto* sweep_cmd = app.add_subcommand("sweep", "train and probe every dataset in a directory");
  std::string w_dir, w_out;
  TrainFlags w_flags;
  sweep_cmd->add_option("--dir", w_dir)->required()->check(CLI::ExistingDirectory);
  sweep_cmd->add_option("--out", w_out, "CSV path")->required();
  sweep_cmd->add_option("--seed", seed);
  sweep_cmd->add_option("--jobs", jobs)->check(CLI::PositiveNumber);
  w_flags.add(sweep_cmd);

  // features
  auto* feat_cmd = app.add_subcommand("features", "activation-frequency histogram");
  std::string f_model, f_data, f_out, f_prior = "stored";
  Index f_k = 10;
  bool f_rescaled = false;
  feat_cmd->add_option("--model", f_model)->required()->check(CLI::ExistingFile);
  feat_cmd->add_option("--data", f_data)->required()->check(CLI::ExistingFile);
  feat_cmd->add_option("--out", f_out, "histogram CSV")->required();
  feat_cmd->add_option("--k", f_k)->check(CLI::PositiveNumber);
  feat_cmd->add_option("--prior", f_prior, "h1-bar source: stored (checkpoint) or data")
      ->check(CLI::IsMember({"stored", "data"}));
  feat_cmd->add_flag("--rescaled", f_rescaled, "standardise baseline activations first");

  // compress
  auto* comp_cmd = app.add_subcommand("compress", "encode a set as flipped-channel indices");
  std::string c_model, c_data, c_out, c_report, c_prior = "stored";
  double c_threshold = -1.0;
  comp_cmd->add_option("--model", c_model)->required()->check(CLI::ExistingFile);
  comp_cmd->add_option("--data", c_data)->required()->check(CLI::ExistingFile);
  comp_cmd->add_option("--threshold", c_threshold, "B in [-1, 0], log2 units")
      ->check(CLI::Range(-1.0, 0.0));
  comp_cmd->add_option("--out", c_out, "compressed set (.baez)")->required();
  comp_cmd->add_option("--report", c_report, "metrics JSON");
  comp_cmd->add_option("--prior", c_prior)->check(CLI::IsMember({"stored", "data"}));

  // decompress
  auto* dec_cmd = app.add_subcommand("decompress", "reconstruct a compressed set");
  std::string d_model, d_in, d_out, d_data, d_report, d_prior = "stored";
  dec_cmd->add_option("--model", d_model)->required()->check(CLI::ExistingFile);
  dec_cmd->add_option("--in", d_in, "compressed set (.baez)")->required()->check(CLI::ExistingFile);
  dec_cmd->add_option("--out", d_out, "reconstructed dataset (.baeh)");
  dec_cmd->add_option("--data", d_data, "originals, for metrics")->check(CLI::ExistingFile);
  dec_cmd->add_option("--report", d_report, "metrics JSON (needs --data)");
  dec_cmd->add_option("--prior", d_prior)->check(CLI::IsMember({"stored", "data"}));

  // comsem
  auto* cs_cmd = app.add_subcommand("comsem", "interpret and score features with a language model");
  std::string cs_model, cs_states, cs_samples, cs_out, cs_cache, cs_mock, cs_prior = "data";
  std::string cs_base = "https://api.openai.com/v1", cs_lm = "gpt-4.1";
  ComSemConfig cs_cfg;
  bool cs_rescaled = false;
  int cs_timeout_ms = 60000, cs_retries = 3;
  cs_cmd->add_option("--model", cs_model)->required()->check(CLI::ExistingFile);
  cs_cmd->add_option("--states", cs_states, "hidden states (.baeh)")->required()->check(CLI::ExistingFile);
  cs_cmd->add_option("--samples", cs_samples, "token samples (JSON lines)")->required()->check(CLI::ExistingFile);
  cs_cmd->add_option("--out", cs_out, "report JSON")->required();
  cs_cmd->add_option("--cache", cs_cache, "exchange log (NDJSON)");
  cs_cmd->add_option("--base-url", cs_base);
  cs_cmd->add_option("--lm-model", cs_lm);
  cs_cmd->add_option("--mock", cs_mock, "offline client: yes, no or alternate")
      ->check(CLI::IsMember({"yes", "no", "alternate"}));
  cs_cmd->add_option("--N", cs_cfg.sample_budget)->check(CLI::PositiveNumber);
  cs_cmd->add_option("--n-i", cs_cfg.n_interp)->check(CLI::PositiveNumber);
  cs_cmd->add_option("--n-t", cs_cfg.n_test)->check(CLI::PositiveNumber);
  cs_cmd->add_option("--k", cs_cfg.k)->check(CLI::PositiveNumber);
  cs_cmd->add_option("--min-activated", cs_cfg.min_activated_samples)->check(CLI::PositiveNumber);
  cs_cmd->add_option("--jobs", cs_cfg.parallelism, "requests in flight")->check(CLI::PositiveNumber);
  cs_cmd->add_option("--timeout-ms", cs_timeout_ms)->check(CLI::PositiveNumber);
  cs_cmd->add_option("--retries", cs_retries)->check(CLI::NonNegativeNumber);
  cs_cmd->add_flag("--rescaled", cs_rescaled, "standardise baseline activations");
  cs_cmd->add_option("--prior", cs_prior)->check(CLI::IsMember({"stored", "data"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  const std::uint64_t seed_value = seed.value_or(0);
  try {
    if (*synth) {
      if (s_rank > s_d) throw std::invalid_argument("--rank must not exceed --d");
      save_synthetic(benchmark_suite(s_d, {s_rank}, s_n, {seed_value}).front(), s_out);
      out << "wrote " << s_out << " (n=" << s_n << ", d=" << s_d << ", rank=" << s_rank << ")\n";
    } else if (*train_cmd) {
      const bool baseline = t_kind != "bae";
      const TrainConfig config = t_flags.resolve(baseline, seed);
      TrainTrace trace;
      Checkpoint ckpt;
      if (!baseline) {
        const auto data = load_dataset(t_data);
        auto r = train(config, data, seed_value);
        const auto m = evaluate(r.model, data);
        out << "recon_loss=" << fmt(m.recon_loss)
            << " entropy_bits_bernoulli=" << fmt(m.entropy_bits_bernoulli)
            << " entropy_bits_eq4=" << fmt(m.entropy_bits_eq4) << "\n";
        trace = std::move(r.trace);
        ckpt = std::move(r.checkpoint);
      } else {
        BaselineParams params;
        if (b_alpha) params.alpha = *b_alpha;
        if (b_k) params.k = *b_k;
        if (b_gamma) params.gamma = *b_gamma;
        const auto kind = parse_baseline_kind(t_kind);
        BaselineTrainResult r;
        if (kind == BaselineKind::transcoder) {
          r = train_transcoder(config, load_paired(t_data), seed_value, params);
          if (r.model.output_dim() != r.model.input_dim())
            throw std::invalid_argument("transcoder checkpoints need d_in == d_out");
        } else {
          r = train_baseline(kind, config, load_dataset(t_data), seed_value, params);
        }
        out << "final_batch_loss=" << fmt(r.trace.empty() ? 0.0 : r.trace.back().recon_loss) << "\n";
        trace = std::move(r.trace);
        ckpt = std::move(r.checkpoint);
      }
      save_checkpoint(ckpt, t_out);
      if (!t_trace.empty()) {
        if (trace.empty()) throw std::invalid_argument("no training steps ran; nothing to trace");
        write_trace(trace, t_trace);
      }
    } else if (*entropy_cmd) {
      const auto ckpt = load_checkpoint(e_model);
      require_bae(ckpt, "entropy");
      const auto data = load_dataset(e_data);
      const auto m = evaluate(ckpt.model, data);
      out << "entropy_bits_bernoulli=" << fmt(m.entropy_bits_bernoulli) << "\n"
          << "entropy_bits_eq4=" << fmt(m.entropy_bits_eq4) << "\n"
          << "recon_loss=" << fmt(m.recon_loss) << "\n";
      if (!e_out.empty())
        write_json_file({{"entropy_bits_bernoulli", m.entropy_bits_bernoulli},
                         {"entropy_bits_eq4", m.entropy_bits_eq4},
                         {"recon_loss", m.recon_loss},
                         {"n", data.n()}},
                        e_out);
    } else if (*sweep_cmd) {
      const auto rows = sweep_entropy(w_dir, w_flags.resolve(false, seed), seed_value, jobs);
      write_sweep_csv(rows, w_out);
      for (const auto& r : rows)
        if (r.error) err << "warning: " << r.dataset << ": " << *r.error << "\n";
      out << "wrote " << rows.size() << " row(s) to " << w_out << "\n";
    } else if (*feat_cmd) {
      const auto ckpt = load_checkpoint(f_model);
      const auto data = load_dataset(f_data);
      VectorXr freq;
      if (checkpoint_kind(ckpt) == "bae") {
        if (f_rescaled) throw std::invalid_argument("--rescaled applies to baselines only");
        freq = activation_frequency(ckpt.model, data, choose_prior(ckpt, &data, f_prior), f_k);
      } else {
        freq = top_k_frequency(baseline_magnitudes(baseline_from_checkpoint(ckpt), data, f_rescaled), f_k);
      }
      write_histogram_csv(freq, f_out);
      out << "dense_fraction=" << fmt(dense_fraction(freq)) << "\n";
    } else if (*comp_cmd) {
      const auto ckpt = load_checkpoint(c_model);
      require_bae(ckpt, "compress");
      const auto data = load_dataset(c_data);
      const VectorXr prior = choose_prior(ckpt, &data, c_prior);
      const auto packed = compress_set(ckpt.model, prior, data, c_threshold);
      save_compressed(packed, c_out);
      const auto report = compression_metrics(ckpt.model, prior, data, packed);
      out << report.to_json().dump() << "\n";
      if (!c_report.empty()) write_json_file(report.to_json(), c_report);
    } else if (*dec_cmd) {
      const auto ckpt = load_checkpoint(d_model);
      require_bae(ckpt, "decompress");
      if (!d_report.empty() && d_data.empty())
        throw std::invalid_argument("--report needs --data with the originals");
      std::optional<HiddenStateSet> originals;
      if (!d_data.empty()) originals = load_dataset(d_data);
      const VectorXr prior = choose_prior(ckpt, originals ? &*originals : nullptr, d_prior);
      const auto packed = load_compressed(d_in);
      if (!d_out.empty()) save_dataset({decompress_set(ckpt.model, prior, packed)}, d_out);
      if (originals) {
        const auto report = compression_metrics(ckpt.model, prior, *originals, packed);
        out << report.to_json().dump() << "\n";
        if (!d_report.empty()) write_json_file(report.to_json(), d_report);
      }
    } else if (*cs_cmd) {
      const auto ckpt = load_checkpoint(cs_model);
      const auto states = load_dataset(cs_states);
      const auto samples = load_token_samples(cs_samples);
      MagnitudeFn magnitude;
      if (checkpoint_kind(ckpt) == "bae") {
        const VectorXr prior = choose_prior(ckpt, &states, cs_prior);
        magnitude = [&ckpt, prior](const MatrixXr& x) {
          return burstiness_rows(encode_batch(ckpt.model, x), prior);
        };
      } else {
        const auto model = baseline_from_checkpoint(ckpt);
        magnitude = [model, cs_rescaled](const MatrixXr& x) {
          return baseline_magnitudes(model, HiddenStateSet{x}, cs_rescaled);
        };
      }
      std::unique_ptr<LmClient> client;
      if (cs_mock == "yes") client = MockLmClient::cycling({"Yes"});
      else if (cs_mock == "no") client = MockLmClient::cycling({"No"});
      else if (cs_mock == "alternate") client = MockLmClient::cycling({"Yes", "No"});
      else {
        auto ep = ChatCompletionsClient::endpoint_from_env(cs_base, cs_lm);
        if (ep.api_key.empty()) err << "warning: COMSEM_API_KEY is not set\n";
        ep.timeout = std::chrono::milliseconds(cs_timeout_ms);
        ep.retries = cs_retries;
        client = std::make_unique<ChatCompletionsClient>(ep);
      }
      ExchangeCache cache(cs_cache);
      const auto report = run_comsem(magnitude, samples, states.rows, cs_cfg, *client, cache);
      nlohmann::json j = report.to_json();
      j["config"] = cs_cfg.to_json();
      write_json_file(j, cs_out);
      out << "FA=" << report.fa << " FI=" << report.fi << " score=" << fmt(report.score) << "\n";
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace bae::cli

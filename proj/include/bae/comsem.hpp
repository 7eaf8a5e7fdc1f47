#pragma once

// Common-semantics feature interpretation: bookkeep the samples that activate
// each feature, ask a language model for their commonality, then score the
// phrase on held-out samples with Yes/No judgements.

#include "bae/types.hpp"

#include <json.hpp>

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace bae {

struct TokenSample {
  std::string token;
  std::int64_t position = 0;  ///< token position in its context (tokenizer-dependent)
  std::string context;
  Index state_row = 0;  ///< row of the sample's hidden state in the accompanying set

  void validate() const;
};

/// JSON lines, one object per sample: {"token", "position", "context", "row"}.
std::vector<TokenSample> load_token_samples(const std::filesystem::path& path);

struct ComSemConfig {
  Index sample_budget = 8192;  ///< N: only the first N samples are used
  Index n_interp = 5;          ///< n_I
  Index n_test = 8;            ///< n_T
  Index k = 10;
  /// Bookkept samples needed before a feature counts as activated.
  Index min_activated_samples = 9;
  unsigned parallelism = 4;  ///< LM requests in flight

  void validate() const;
  nlohmann::json to_json() const;
};

// ---- language-model clients ----

class LmTransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class LmClient {
 public:
  virtual ~LmClient() = default;
  /// Sends one user prompt and returns the raw reply text. Throws
  /// LmTransportError when the exchange fails; must be thread-safe.
  virtual std::string complete(const std::string& prompt) = 0;
};

/// Deterministic stand-in: a reply function of (call index, prompt).
class MockLmClient : public LmClient {
 public:
  using Responder = std::function<std::string(std::size_t call, const std::string& prompt)>;
  explicit MockLmClient(Responder responder) : responder_(std::move(responder)) {}
  /// Cycles through `replies` in call order.
  static std::unique_ptr<MockLmClient> cycling(std::vector<std::string> replies);

  std::string complete(const std::string& prompt) override;
  std::size_t calls() const;
  std::vector<std::string> prompts() const;

 private:
  Responder responder_;
  mutable std::mutex mu_;
  std::vector<std::string> prompts_;
};

struct ChatEndpoint {
  std::string base_url = "https://api.openai.com/v1";
  std::string model = "gpt-4.1";
  std::string api_key;  ///< usually from COMSEM_API_KEY
  std::chrono::milliseconds timeout{60000};
  int retries = 3;
  std::chrono::milliseconds backoff{1000};  ///< doubled after each failed attempt
  double temperature = 0.0;
};

/// POST {base_url}/chat/completions in the OpenAI wire format.
class ChatCompletionsClient : public LmClient {
 public:
  explicit ChatCompletionsClient(ChatEndpoint endpoint);
  /// Endpoint with the key read from COMSEM_API_KEY (empty if unset).
  static ChatEndpoint endpoint_from_env(std::string base_url, std::string model);

  std::string complete(const std::string& prompt) override;

 private:
  std::string attempt(const std::string& body) const;

  ChatEndpoint endpoint_;
  std::string scheme_host_;
  std::string path_;
};

// ---- cache ----

/// Append-only NDJSON log of exchanges {prompt_hash, prompt, reply, timestamp}.
class ExchangeCache {
 public:
  using Clock = std::function<std::string()>;

  /// Loads existing records (if the file exists). An empty path keeps the
  /// cache in memory only.
  explicit ExchangeCache(std::filesystem::path path = {}, Clock clock = utc_now);

  std::optional<std::string> lookup(const std::string& prompt) const;
  /// Ignored when the prompt is already cached.
  void record(const std::string& prompt, const std::string& reply);
  std::size_t size() const;

  static std::string hash(const std::string& prompt);  ///< hex SHA-256
  static std::string utc_now();

 private:
  std::filesystem::path path_;
  Clock clock_;
  mutable std::mutex mu_;
  std::map<std::string, std::string> replies_;
};

// ---- algorithm ----

/// Prompt templates (instruction text with worked examples).
std::string interpretation_prompt(const std::vector<const TokenSample*>& samples);
std::string test_prompt(const TokenSample& sample, const std::string& phrase);
std::string format_sample_line(const TokenSample& sample);

/// Maps the full n x d hidden-state matrix to n x d' magnitudes.
using MagnitudeFn = std::function<MatrixXr(const MatrixXr& states)>;

/// Per-feature bookkept sample indices (into `samples`), each sample added to
/// its top-k features in input order.
std::vector<std::vector<std::size_t>> collect_activated_samples(
    const MagnitudeFn& magnitude, const std::vector<TokenSample>& samples,
    const MatrixXr& states, Index k);

/// First line of the reply, trimmed; throws on an empty reply.
std::string parse_interpretation(const std::string& reply, bool* multi_line = nullptr);

enum class Verdict { yes, no, unparsed };
/// Case-insensitive yes/no after trimming whitespace, quotes and a final period.
Verdict parse_verdict(const std::string& reply);

struct FeatureRecord {
  Index feature = 0;
  std::size_t bookkept = 0;
  bool activated = false;
  std::string interpretation;
  bool multi_line_reply = false;
  double score = 0;              ///< yes / tested
  double score_over_holdout = 0; ///< yes / full holdout length
  std::size_t tested = 0;
  std::size_t yes = 0;
  std::size_t unparsed = 0;  ///< replies counted as No
  std::size_t skipped = 0;   ///< transport failures, excluded from `tested`
};

struct ComSemReport {
  std::vector<FeatureRecord> features;
  Index fa = 0;
  Index fi = 0;
  double score = 0;  ///< mean score over activated features
  std::vector<std::string> log;

  nlohmann::json to_json() const;
  /// Recomputes FA, FI and Score from the per-feature records.
  void refold();
};

class ComSemError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Runs all interpretation queries, then all test queries. Cached prompts
/// are answered from `cache`; new exchanges are appended in a fixed order.
/// A failed interpretation aborts the run after in-flight work completes.
ComSemReport run_comsem(const MagnitudeFn& magnitude, const std::vector<TokenSample>& samples,
                        const MatrixXr& states, const ComSemConfig& config, LmClient& client,
                        ExchangeCache& cache);

/// Algorithm steps on pre-collected bookkeeping (used by run_comsem).
ComSemReport run_comsem_on(const std::vector<std::vector<std::size_t>>& bookkept,
                           const std::vector<TokenSample>& samples, const ComSemConfig& config,
                           LmClient& client, ExchangeCache& cache);

}  // namespace bae

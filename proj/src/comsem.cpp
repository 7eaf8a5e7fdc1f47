#include "bae/comsem.hpp"

#include "bae/features.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <condition_variable>
#include <ctime>
#include <fstream>
#include <thread>

namespace bae {

// ---- samples / config ----

void TokenSample::validate() const {
  if (context.empty()) throw std::invalid_argument("token sample with empty context");
  if (position < 0) throw std::invalid_argument("token position must be >= 0");
  if (state_row < 0) throw std::invalid_argument("state row must be >= 0");
}

std::vector<TokenSample> load_token_samples(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string() + " for reading");
  std::vector<TokenSample> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path.string() + ":" + std::to_string(lineno);
    try {
      const auto j = nlohmann::json::parse(line);
      TokenSample s;
      s.token = j.at("token").get<std::string>();
      s.position = j.at("position").get<std::int64_t>();
      s.context = j.at("context").get<std::string>();
      s.state_row = j.at("row").get<Index>();
      s.validate();
      out.push_back(std::move(s));
    } catch (const std::exception& e) {
      throw FormatError(where + ": " + e.what());
    }
  }
  return out;
}

void ComSemConfig::validate() const {
  if (sample_budget < 1) throw std::invalid_argument("sample budget N must be >= 1");
  if (n_interp < 1) throw std::invalid_argument("n_I must be >= 1");
  if (n_test < 1) throw std::invalid_argument("n_T must be >= 1");
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  if (min_activated_samples < n_interp + 1)
    throw std::invalid_argument("min_activated_samples must leave a held-out sample (>= n_I + 1)");
  if (parallelism < 1) throw std::invalid_argument("parallelism must be >= 1");
}

nlohmann::json ComSemConfig::to_json() const {
  return {{"N", sample_budget},
          {"n_I", n_interp},
          {"n_T", n_test},
          {"k", k},
          {"min_activated_samples", min_activated_samples},
          {"parallelism", parallelism}};
}

// ---- mock client ----

std::unique_ptr<MockLmClient> MockLmClient::cycling(std::vector<std::string> replies) {
  if (replies.empty()) throw std::invalid_argument("cycling mock needs replies");
  return std::make_unique<MockLmClient>(
      [r = std::move(replies)](std::size_t call, const std::string&) { return r[call % r.size()]; });
}

std::string MockLmClient::complete(const std::string& prompt) {
  std::size_t call;
  {
    std::lock_guard lock(mu_);
    call = prompts_.size();
    prompts_.push_back(prompt);
  }
  return responder_(call, prompt);
}

std::size_t MockLmClient::calls() const {
  std::lock_guard lock(mu_);
  return prompts_.size();
}

std::vector<std::string> MockLmClient::prompts() const {
  std::lock_guard lock(mu_);
  return prompts_;
}

// ---- cache ----

ExchangeCache::ExchangeCache(std::filesystem::path path, Clock clock)
    : path_(std::move(path)), clock_(std::move(clock)) {
  if (path_.empty() || !std::filesystem::exists(path_)) return;
  std::ifstream in(path_);
  if (!in) throw std::runtime_error("cannot open cache " + path_.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      replies_.emplace(j.at("prompt_hash").get<std::string>(), j.at("reply").get<std::string>());
    } catch (const std::exception& e) {
      throw FormatError(path_.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

std::optional<std::string> ExchangeCache::lookup(const std::string& prompt) const {
  std::lock_guard lock(mu_);
  const auto it = replies_.find(hash(prompt));
  if (it == replies_.end()) return std::nullopt;
  return it->second;
}

void ExchangeCache::record(const std::string& prompt, const std::string& reply) {
  const std::string key = hash(prompt);
  std::lock_guard lock(mu_);
  if (!replies_.emplace(key, reply).second) return;
  if (path_.empty()) return;
  const nlohmann::json rec = {
      {"prompt_hash", key}, {"prompt", prompt}, {"reply", reply}, {"timestamp", clock_()}};
  std::ofstream out(path_, std::ios::app);
  out << rec.dump() << '\n';
  out.flush();
  if (!out) throw std::runtime_error("cannot append to cache " + path_.string());
}

std::size_t ExchangeCache::size() const {
  std::lock_guard lock(mu_);
  return replies_.size();
}

std::string ExchangeCache::hash(const std::string& prompt) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(prompt.data(), prompt.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("SHA-256 failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 15];
  }
  return out;
}

std::string ExchangeCache::utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// ---- parsing ----

namespace {

std::string trim(const std::string& s, const char* chars = " \t\r\n") {
  const auto b = s.find_first_not_of(chars);
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(chars) - b + 1);
}

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

}  // namespace

std::string parse_interpretation(const std::string& reply, bool* multi_line) {
  const std::string body = trim(reply);
  if (body.empty()) throw std::runtime_error("empty interpretation reply");
  const auto nl = body.find('\n');
  if (multi_line) *multi_line = nl != std::string::npos;
  return trim(body.substr(0, nl));
}

Verdict parse_verdict(const std::string& reply) {
  std::string s = trim(reply, " \t\r\n\"'");
  if (!s.empty() && s.back() == '.') s.pop_back();
  s = lower(trim(s, " \t\r\n\"'"));
  if (s == "yes") return Verdict::yes;
  if (s == "no") return Verdict::no;
  return Verdict::unparsed;
}

// ---- bookkeeping ----

std::vector<std::vector<std::size_t>> collect_activated_samples(
    const MagnitudeFn& magnitude, const std::vector<TokenSample>& samples,
    const MatrixXr& states, Index k) {
  const MatrixXr mags = magnitude(states);
  require_dims(mags.rows() == states.rows(), "magnitude rows vs state rows");
  if (k < 1 || k > mags.cols())
    throw std::invalid_argument("k must lie in [1, d'] for top-k bookkeeping");
  std::vector<std::vector<std::size_t>> book(static_cast<std::size_t>(mags.cols()));
  for (std::size_t i = 0; i < samples.size(); ++i) {
    samples[i].validate();
    const Index row = samples[i].state_row;
    if (row >= mags.rows())
      throw std::out_of_range("sample " + std::to_string(i) + " references state row " +
                              std::to_string(row) + " beyond the set");
    for (Index j : significant_channels(mags.row(row).transpose(), k))
      book[static_cast<std::size_t>(j)].push_back(i);
  }
  return book;
}

// ---- report ----

void ComSemReport::refold() {
  fa = 0;
  fi = 0;
  double total = 0;
  for (const auto& f : features) {
    if (!f.activated) continue;
    ++fa;
    total += f.score;
    if (f.score > 0) ++fi;
  }
  score = fa > 0 ? total / static_cast<double>(fa) : 0.0;
}

nlohmann::json ComSemReport::to_json() const {
  nlohmann::json feats = nlohmann::json::array();
  for (const auto& f : features) {
    nlohmann::json j = {{"feature", f.feature}, {"bookkept", f.bookkept}, {"activated", f.activated}};
    if (f.activated) {
      j["interpretation"] = f.interpretation;
      j["multi_line_reply"] = f.multi_line_reply;
      j["score"] = f.score;
      j["score_over_holdout"] = f.score_over_holdout;
      j["tested"] = f.tested;
      j["yes"] = f.yes;
      j["unparsed"] = f.unparsed;
      j["skipped"] = f.skipped;
    }
    feats.push_back(std::move(j));
  }
  return {{"FA", fa}, {"FI", fi}, {"score", score}, {"features", feats}, {"log", log}};
}

// ---- algorithm ----

namespace {

struct Outcome {
  std::optional<std::string> reply;
  std::string error;
};

/// Answers every prompt, from the cache when possible, with at most
/// `parallelism` client calls in flight. New exchanges are committed to the
/// cache strictly in prompt order so the log is reproducible.
std::vector<Outcome> exchange_all(const std::vector<std::string>& prompts, LmClient& client,
                                  ExchangeCache& cache, unsigned parallelism) {
  const std::size_t n = prompts.size();
  std::vector<Outcome> out(n);
  std::vector<char> done(n, 0), fresh(n, 0);
  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < n; ++i) {
    if (auto hit = cache.lookup(prompts[i])) {
      out[i].reply = std::move(hit);
      done[i] = 1;
    } else {
      pending.push_back(i);
    }
  }

  std::mutex mu;
  std::size_t next_commit = 0;
  std::exception_ptr commit_error;
  auto commit = [&] {  // caller holds mu
    while (next_commit < n && done[next_commit]) {
      if (fresh[next_commit] && out[next_commit].reply && !commit_error) {
        try {
          cache.record(prompts[next_commit], *out[next_commit].reply);
        } catch (...) {
          commit_error = std::current_exception();
        }
      }
      ++next_commit;
    }
  };
  {
    std::lock_guard lock(mu);
    commit();
  }

  std::atomic<std::size_t> cursor{0};
  auto work = [&] {
    for (std::size_t p; (p = cursor.fetch_add(1)) < pending.size();) {
      const std::size_t i = pending[p];
      Outcome o;
      try {
        o.reply = client.complete(prompts[i]);
      } catch (const std::exception& e) {
        o.error = e.what();
      }
      std::lock_guard lock(mu);
      out[i] = std::move(o);
      fresh[i] = 1;
      done[i] = 1;
      commit();
    }
  };
  const unsigned workers =
      static_cast<unsigned>(std::min<std::size_t>(std::max(1u, parallelism), pending.size()));
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  if (commit_error) std::rethrow_exception(commit_error);
  return out;
}

}  // namespace

ComSemReport run_comsem_on(const std::vector<std::vector<std::size_t>>& bookkept,
                           const std::vector<TokenSample>& samples, const ComSemConfig& config,
                           LmClient& client, ExchangeCache& cache) {
  config.validate();
  ComSemReport report;
  report.features.resize(bookkept.size());
  const auto n_i = static_cast<std::size_t>(config.n_interp);
  const auto n_t = static_cast<std::size_t>(config.n_test);

  std::vector<std::size_t> active;
  std::vector<std::string> prompts;
  for (std::size_t f = 0; f < bookkept.size(); ++f) {
    auto& rec = report.features[f];
    rec.feature = static_cast<Index>(f);
    rec.bookkept = bookkept[f].size();
    for (const auto s : bookkept[f])
      if (s >= samples.size()) throw std::out_of_range("bookkept sample index out of range");
    if (rec.bookkept < static_cast<std::size_t>(config.min_activated_samples)) continue;
    rec.activated = true;
    active.push_back(f);
    std::vector<const TokenSample*> shown;
    for (std::size_t j = 0; j < n_i; ++j) shown.push_back(&samples[bookkept[f][j]]);
    prompts.push_back(interpretation_prompt(shown));
  }

  // Interpretations for every activated feature.
  const auto interp = exchange_all(prompts, client, cache, config.parallelism);
  std::vector<std::string> failures;
  for (std::size_t a = 0; a < active.size(); ++a) {
    auto& rec = report.features[active[a]];
    try {
      if (!interp[a].reply) throw std::runtime_error(interp[a].error);
      rec.interpretation = parse_interpretation(*interp[a].reply, &rec.multi_line_reply);
    } catch (const std::exception& e) {
      failures.push_back("feature " + std::to_string(rec.feature) + ": " + e.what());
      continue;
    }
    if (rec.multi_line_reply)
      report.log.push_back("feature " + std::to_string(rec.feature) +
                           ": multi-line interpretation reply truncated to its first line");
  }
  if (!failures.empty()) {
    std::string msg = "interpretation failed for " + std::to_string(failures.size()) + " feature(s)";
    for (const auto& f : failures) msg += "\n  " + f;
    throw ComSemError(msg);
  }

  // Yes/No judgements on the held-out samples.
  struct Job {
    std::size_t feature;
    std::size_t sample;
  };
  std::vector<Job> jobs;
  prompts.clear();
  for (const auto f : active) {
    const auto& list = bookkept[f];
    const std::size_t end = std::min(list.size(), n_i + n_t);
    for (std::size_t j = n_i; j < end; ++j) {
      jobs.push_back({f, list[j]});
      prompts.push_back(test_prompt(samples[list[j]], report.features[f].interpretation));
    }
  }
  const auto verdicts = exchange_all(prompts, client, cache, config.parallelism);
  for (std::size_t q = 0; q < jobs.size(); ++q) {
    auto& rec = report.features[jobs[q].feature];
    if (!verdicts[q].reply) {
      ++rec.skipped;
      report.log.push_back("feature " + std::to_string(rec.feature) + ", sample " +
                           std::to_string(jobs[q].sample) + ": skipped (" + verdicts[q].error + ")");
      continue;
    }
    ++rec.tested;
    switch (parse_verdict(*verdicts[q].reply)) {
      case Verdict::yes: ++rec.yes; break;
      case Verdict::no: break;
      case Verdict::unparsed:
        ++rec.unparsed;
        report.log.push_back("feature " + std::to_string(rec.feature) + ", sample " +
                             std::to_string(jobs[q].sample) + ": reply '" + *verdicts[q].reply +
                             "' counted as No");
        break;
    }
  }
  for (const auto f : active) {
    auto& rec = report.features[f];
    const std::size_t holdout = rec.bookkept - n_i;
    rec.score = rec.tested > 0 ? double(rec.yes) / double(rec.tested) : 0.0;
    rec.score_over_holdout = double(rec.yes) / double(holdout);
    if (rec.tested == 0)
      report.log.push_back("feature " + std::to_string(rec.feature) +
                           ": no test reply received; score set to 0");
  }
  report.refold();
  return report;
}

ComSemReport run_comsem(const MagnitudeFn& magnitude, const std::vector<TokenSample>& samples,
                        const MatrixXr& states, const ComSemConfig& config, LmClient& client,
                        ExchangeCache& cache) {
  config.validate();
  const std::size_t used = std::min(samples.size(), static_cast<std::size_t>(config.sample_budget));
  const std::vector<TokenSample> subset(samples.begin(), samples.begin() + static_cast<std::ptrdiff_t>(used));
  const auto book = collect_activated_samples(magnitude, subset, states, config.k);
  return run_comsem_on(book, subset, config, client, cache);
}

}  // namespace bae

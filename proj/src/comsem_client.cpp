#include "bae/comsem.hpp"

// After Eigen: <resolv.h>, pulled in by httplib, defines a `_res` macro.
#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <cstdlib>
#include <thread>

namespace bae {

namespace {

class RetryableError : public LmTransportError {
 public:
  using LmTransportError::LmTransportError;
};

}  // namespace

ChatCompletionsClient::ChatCompletionsClient(ChatEndpoint endpoint)
    : endpoint_(std::move(endpoint)) {
  const auto& url = endpoint_.base_url;
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos)
    throw std::invalid_argument("base URL needs a scheme: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  scheme_host_ = url.substr(0, path_start);
  path_ = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!path_.empty() && path_.back() == '/') path_.pop_back();
  path_ += "/chat/completions";
  if (endpoint_.retries < 0) throw std::invalid_argument("retries must be >= 0");
}

ChatEndpoint ChatCompletionsClient::endpoint_from_env(std::string base_url, std::string model) {
  ChatEndpoint e;
  e.base_url = std::move(base_url);
  e.model = std::move(model);
  if (const char* key = std::getenv("COMSEM_API_KEY")) e.api_key = key;
  return e;
}

std::string ChatCompletionsClient::attempt(const std::string& body) const {
  httplib::Client cli(scheme_host_);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(endpoint_.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(endpoint_.timeout - secs);
  cli.set_connection_timeout(secs.count(), usecs.count());
  cli.set_read_timeout(secs.count(), usecs.count());
  cli.set_write_timeout(secs.count(), usecs.count());
  httplib::Headers headers;
  if (!endpoint_.api_key.empty())
    headers.emplace("Authorization", "Bearer " + endpoint_.api_key);

  const auto res = cli.Post(path_, headers, body, "application/json");
  if (!res) throw RetryableError("request failed: " + httplib::to_string(res.error()));
  if (res->status == 429 || res->status >= 500)
    throw RetryableError("HTTP " + std::to_string(res->status));
  if (res->status != 200)
    throw LmTransportError("HTTP " + std::to_string(res->status) + ": " + res->body);
  try {
    const auto j = nlohmann::json::parse(res->body);
    return j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const std::exception& e) {
    throw LmTransportError(std::string("malformed completion response: ") + e.what());
  }
}

std::string ChatCompletionsClient::complete(const std::string& prompt) {
  const nlohmann::json request = {
      {"model", endpoint_.model},
      {"temperature", endpoint_.temperature},
      {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})}};
  const std::string body = request.dump();
  auto wait = endpoint_.backoff;
  for (int tries = 0;; ++tries) {
    try {
      return attempt(body);
    } catch (const RetryableError& e) {
      if (tries >= endpoint_.retries)
        throw LmTransportError(std::string(e.what()) + " (after " + std::to_string(tries + 1) +
                               " attempts)");
    }
    std::this_thread::sleep_for(wait);
    wait *= 2;
  }
}

}  // namespace bae

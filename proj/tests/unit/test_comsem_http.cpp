#include "bae/comsem.hpp"

// Same configuration as the client translation unit.
#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <doctest.h>

#include <atomic>
#include <thread>

using namespace bae;

namespace {

/// Local chat-completions stand-in on an ephemeral port.
class FakeEndpoint {
 public:
  explicit FakeEndpoint(std::function<void(const httplib::Request&, httplib::Response&)> handler) {
    server_.Post("/v1/chat/completions", std::move(handler));
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeEndpoint() {
    server_.stop();
    thread_.join();
  }
  ChatEndpoint endpoint() const {
    ChatEndpoint e;
    e.base_url = "http://127.0.0.1:" + std::to_string(port_) + "/v1/";
    e.model = "test-model";
    e.api_key = "secret";
    e.timeout = std::chrono::milliseconds(5000);
    e.retries = 2;
    e.backoff = std::chrono::milliseconds(1);
    return e;
  }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

std::string completion(const std::string& content) {
  return nlohmann::json{{"choices", {{{"message", {{"role", "assistant"}, {"content", content}}}}}}}
      .dump();
}

}  // namespace

TEST_CASE("chat client: request shape and reply extraction") {
  nlohmann::json seen;
  std::string auth;
  FakeEndpoint fake([&](const httplib::Request& req, httplib::Response& res) {
    seen = nlohmann::json::parse(req.body);
    auth = req.get_header_value("Authorization");
    res.set_content(completion("Yes"), "application/json");
  });
  ChatCompletionsClient client(fake.endpoint());
  CHECK(client.complete("hello") == "Yes");
  CHECK(auth == "Bearer secret");
  CHECK(seen["model"] == "test-model");
  CHECK(seen["temperature"] == 0.0);
  CHECK(seen["messages"][0]["role"] == "user");
  CHECK(seen["messages"][0]["content"] == "hello");
}

TEST_CASE("chat client: retries server errors, fails fast on client errors") {
  std::atomic<int> calls{0};
  FakeEndpoint flaky([&](const httplib::Request&, httplib::Response& res) {
    if (calls++ < 2) {
      res.status = calls == 1 ? 503 : 429;
      return;
    }
    res.set_content(completion("No"), "application/json");
  });
  ChatCompletionsClient client(flaky.endpoint());
  CHECK(client.complete("q") == "No");
  CHECK(calls == 3);

  std::atomic<int> bad_calls{0};
  FakeEndpoint bad([&](const httplib::Request&, httplib::Response& res) {
    ++bad_calls;
    res.status = 401;
  });
  ChatCompletionsClient c2(bad.endpoint());
  CHECK_THROWS_AS(c2.complete("q"), LmTransportError);
  CHECK(bad_calls == 1);

  std::atomic<int> down_calls{0};
  FakeEndpoint down([&](const httplib::Request&, httplib::Response& res) {
    ++down_calls;
    res.status = 500;
  });
  ChatCompletionsClient c3(down.endpoint());
  CHECK_THROWS_AS(c3.complete("q"), LmTransportError);
  CHECK(down_calls == 3);  // one try plus two retries
}

TEST_CASE("chat client: malformed bodies and bad URLs") {
  FakeEndpoint junk([](const httplib::Request&, httplib::Response& res) {
    res.set_content("{\"nope\": 1}", "application/json");
  });
  ChatCompletionsClient client(junk.endpoint());
  CHECK_THROWS_AS(client.complete("q"), LmTransportError);
  ChatEndpoint e;
  e.base_url = "localhost/v1";
  CHECK_THROWS(ChatCompletionsClient{e});
}

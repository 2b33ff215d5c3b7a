#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <mutex>
#include <thread>

#include "selfcheck/http_backend.hpp"

using namespace selfcheck;

namespace {

// Local server whose handlers are set per test.
class HttpTest : public ::testing::Test {
 protected:
  void SetUp() override {
    port_ = server_.bind_to_any_port("127.0.0.1");
    ASSERT_GT(port_, 0);
  }

  void start() {
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  void TearDown() override {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

  HttpOptions options() {
    HttpOptions o;
    o.base_url = "http://127.0.0.1:" + std::to_string(port_) + "/v1";
    o.sleep = [this](double s) {
      std::lock_guard lock(mutex_);
      sleeps_.push_back(s);
    };
    return o;
  }

  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::mutex mutex_;
  std::vector<double> sleeps_;
  std::vector<json> bodies_;
  std::vector<std::string> auth_;
};

TEST_F(HttpTest, ChatCompletionWireFormat) {
  server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
    bodies_.push_back(json::parse(req.body));
    auth_.push_back(req.get_header_value("Authorization"));
    json choices = json::array();
    for (int i = 0; i < bodies_.back()["n"].get<int>(); ++i) {
      choices.push_back({{"message", {{"role", "assistant"}, {"content", "reply " + std::to_string(i)}}}});
    }
    res.set_content(json{{"choices", choices}}.dump(), "application/json");
  });
  start();
  auto o = options();
  o.api_key = "secret";
  HttpClient client(o);
  HttpGenerator judge(client, "gpt-3.5-turbo", "You are a helpful assistant.");
  const auto out = judge.generate("Context: c", 0.0, 2);
  EXPECT_EQ(out, (std::vector<std::string>{"reply 0", "reply 1"}));
  ASSERT_EQ(bodies_.size(), 1u);
  const auto& b = bodies_[0];
  EXPECT_EQ(b["model"], "gpt-3.5-turbo");
  EXPECT_EQ(b["temperature"], 0.0);
  EXPECT_EQ(b["n"], 2);
  ASSERT_EQ(b["messages"].size(), 2u);
  EXPECT_EQ(b["messages"][0]["role"], "system");
  EXPECT_EQ(b["messages"][0]["content"], "You are a helpful assistant.");
  EXPECT_EQ(b["messages"][1], (json{{"role", "user"}, {"content", "Context: c"}}));
  EXPECT_EQ(auth_[0], "Bearer secret");

  HttpGenerator plain(client, "text-davinci-003");
  plain.generate("p", 1.0, 1);
  EXPECT_EQ(bodies_[1]["messages"].size(), 1u);
  EXPECT_NE(plain.id(), HttpGenerator(client, "text-davinci-003", "sys").id());
}

TEST_F(HttpTest, NoAuthorizationHeaderWithoutKey) {
  server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
    auth_.push_back(req.has_header("Authorization") ? "present" : "absent");
    res.set_content(R"({"choices":[{"message":{"content":"x"}}]})", "application/json");
  });
  start();
  HttpClient client(options());
  HttpGenerator(client, "m").generate("p", 0.0, 1);
  EXPECT_EQ(auth_.at(0), "absent");
}

TEST_F(HttpTest, RetriesServerErrorsWithBackoff) {
  std::atomic<int> calls{0};
  server_.Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    if (++calls < 3) {
      res.status = 503;
      return;
    }
    res.set_content(R"({"choices":[{"message":{"content":"ok"}}]})", "application/json");
  });
  start();
  HttpClient client(options());
  EXPECT_EQ(HttpGenerator(client, "m").generate("p", 0.0, 1).at(0), "ok");
  EXPECT_EQ(calls.load(), 3);
  EXPECT_EQ(client.requests(), 3u);
  ASSERT_EQ(sleeps_.size(), 2u);
  // initial 1 s then 2 s, each jittered by a factor in [0.5, 1.5]
  EXPECT_GE(sleeps_[0], 0.5);
  EXPECT_LE(sleeps_[0], 1.5);
  EXPECT_GE(sleeps_[1], 1.0);
  EXPECT_LE(sleeps_[1], 3.0);
}

TEST_F(HttpTest, GivesUpAfterMaxAttempts) {
  std::atomic<int> calls{0};
  server_.Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    ++calls;
    res.status = 500;
  });
  start();
  HttpClient client(options());
  try {
    HttpGenerator(client, "m").generate("p", 0.0, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Transport);
    EXPECT_TRUE(e.is_backend_failure());
  }
  EXPECT_EQ(calls.load(), 3);
}

TEST_F(HttpTest, ClientErrorsAreNotRetried) {
  std::atomic<int> calls{0};
  server_.Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    ++calls;
    res.status = 400;
    res.set_content("bad request", "text/plain");
  });
  start();
  HttpClient client(options());
  EXPECT_THROW(HttpGenerator(client, "m").generate("p", 0.0, 1), Error);
  EXPECT_EQ(calls.load(), 1);
}

TEST_F(HttpTest, RateLimitHonoursRetryAfter) {
  server_.Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    res.status = 429;
    res.set_header("Retry-After", "7");
  });
  start();
  HttpClient client(options());
  try {
    HttpGenerator(client, "m").generate("p", 0.0, 1);
    FAIL();
  } catch (const RateLimitError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::RateLimit);
    EXPECT_EQ(e.retry_after(), 7.0);
  }
  ASSERT_EQ(sleeps_.size(), 2u);
  for (double s : sleeps_) EXPECT_GE(s, 7.0);
}

TEST_F(HttpTest, TransportErrorWhenNothingListens) {
  auto o = options();
  o.base_url = "http://127.0.0.1:1/v1";
  o.max_attempts = 2;
  o.timeout_seconds = 2.0;
  HttpClient client(o);
  try {
    HttpGenerator(client, "m").generate("p", 0.0, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Transport);
  }
  EXPECT_EQ(client.requests(), 2u);
}

TEST_F(HttpTest, LogprobsAreConvertedAndContextDropped) {
  server_.Post("/v1/completions", [this](const httplib::Request& req, httplib::Response& res) {
    bodies_.push_back(json::parse(req.body));
    // prompt "Ctx:" + " a b" as tokens "Ctx", ":", " a", " b"; base-2 logprobs
    const json lp{{"tokens", {"Ctx", ":", " a", " b"}},
                  {"token_logprobs", {nullptr, -1.0, -1.0, -2.0}},
                  {"text_offset", {0, 3, 4, 6}},
                  {"top_logprobs", {nullptr, {{":", -1.0}}, {{" c", -2.0}, {" a", -1.0}}, {{" b", -2.0}}}}};
    res.set_content(json{{"choices", {{{"logprobs", lp}}}}}.dump(), "application/json");
  });
  start();
  auto o = options();
  o.logprob_base = 2.0;
  HttpClient client(o);
  HttpTokenScorer scorer(client, "llama-30b");
  const auto tokens = scorer.score_tokens(" a b", "Ctx:");
  const auto& b = bodies_.at(0);
  EXPECT_EQ(b["prompt"], "Ctx: a b");
  EXPECT_EQ(b["echo"], true);
  EXPECT_EQ(b["logprobs"], 5);
  EXPECT_EQ(b["max_tokens"], 0);
  ASSERT_EQ(tokens.size(), 2u);
  EXPECT_EQ(tokens[0].token, " a");
  EXPECT_NEAR(tokens[0].logprob, -std::log(2.0), 1e-12);
  EXPECT_NEAR(tokens[1].logprob, -2.0 * std::log(2.0), 1e-12);
  ASSERT_TRUE(tokens[0].topk.has_value());
  EXPECT_EQ((*tokens[0].topk)[0].token, " a");
  EXPECT_NEAR((*tokens[0].topk)[0].prob, 0.5, 1e-12);
  EXPECT_NEAR((*tokens[0].topk)[1].prob, 0.25, 1e-12);
}

TEST_F(HttpTest, TextTooLong) {
  start();
  auto o = options();
  o.max_text_chars = 5;
  HttpClient client(o);
  HttpTokenScorer scorer(client, "m");
  try {
    scorer.score_tokens("abcdef", "");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("text-too-long"), std::string::npos);
  }
  EXPECT_EQ(client.requests(), 0u);
}

TEST_F(HttpTest, ScoringEndpoint) {
  server_.Post("/v1/score", [this](const httplib::Request& req, httplib::Response& res) {
    const auto b = json::parse(req.body);
    bodies_.push_back(b);
    const auto task = b["task"].get<std::string>();
    json r;
    if (task == "similarity") r = {{"score", 1.03}};
    else if (task == "nli") r = {{"entail", 1.0}, {"contradict", 0.0}};
    else if (task == "qa_generate") r = {{"items", {{{"question", "q"}, {"options", {"a", "b", "c", "d"}}, {"answer_index", 2}}}}};
    else r = {{"answer_index", 1}, {"answerability", 0.75}};
    res.set_content(r.dump(), "application/json");
  });
  start();
  HttpClient client(options());
  HttpScoringBackend backend(client, "scorer");
  EXPECT_EQ(backend.similarity("x", "y"), 1.0);
  EXPECT_EQ(backend.nli("p", "h"), (NliLogits{1.0, 0.0}));
  const auto g = backend.qa_generate("s", "p", 1);
  ASSERT_EQ(g.items.size(), 1u);
  EXPECT_EQ(g.items[0].gold_index, 2u);
  EXPECT_EQ(backend.qa_answer(g.items[0], "ctx"), (QaAnswer{1, 0.75}));
  EXPECT_EQ(bodies_[0]["model"], "scorer");
  EXPECT_EQ(bodies_[2]["n_questions"], 1);
}

TEST_F(HttpTest, MalformedResponseIsBackendError) {
  server_.Post("/v1/chat/completions", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"unexpected":true})", "application/json");
  });
  start();
  HttpClient client(options());
  try {
    HttpGenerator(client, "m").generate("p", 0.0, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Backend);
  }
}

TEST(HttpOptions, ApiKeyOnlyFromEnvironment) {
  setenv("SELFCHECK_API_KEY", "from-env", 1);
  EXPECT_EQ(api_key_from_env(), "from-env");
  unsetenv("SELFCHECK_API_KEY");
  EXPECT_EQ(api_key_from_env(), "");
}

}  // namespace

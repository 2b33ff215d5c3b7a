#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <memory>
#include <random>
#include <semaphore>
#include <string>
#include <type_traits>
#include <thread>
#include <vector>

#include "httplib.h"
#include "json.hpp"
#include "selfcheck/backends.hpp"
#include "selfcheck/hash.hpp"
#include "selfcheck/cache.hpp"

namespace selfcheck {

using json = nlohmann::json;

struct HttpOptions {
  std::string base_url = "http://localhost:8000/v1";
  std::string api_key;  // bearer token; empty sends no Authorization header
  int max_attempts = 3;
  double initial_backoff_seconds = 1.0;
  int concurrency = 4;
  double timeout_seconds = 120.0;
  double logprob_base = 2.718281828459045;  // base of logprobs reported by the server
  std::size_t max_text_chars = 32000;
  // Overridable so tests do not sleep.
  std::function<void(double)> sleep = [](double s) {
    std::this_thread::sleep_for(std::chrono::duration<double>(s));
  };
};

inline std::string api_key_from_env() {
  const char* v = std::getenv("SELFCHECK_API_KEY");
  return v ? std::string(v) : std::string();
}

// JSON-over-HTTP transport with bounded fan-out and retry with jittered
// exponential backoff.
class HttpClient {
 public:
  explicit HttpClient(HttpOptions options)
      : options_(std::move(options)), slots_(std::max(1, options_.concurrency)) {
    require(options_.max_attempts >= 1, "max_attempts must be >= 1");
    const auto scheme_end = options_.base_url.find("://");
    if (scheme_end == std::string::npos) {
      throw Error(ErrorKind::Validation, "base URL must include a scheme: " + options_.base_url);
    }
    const auto path_start = options_.base_url.find('/', scheme_end + 3);
    origin_ = options_.base_url.substr(0, path_start);
    prefix_ = path_start == std::string::npos ? "" : options_.base_url.substr(path_start);
    while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
  }

  json post(const std::string& path, const json& body) {
    Slot slot(slots_);
    std::mt19937 jitter_rng(std::random_device{}());
    std::uniform_real_distribution<double> jitter(0.5, 1.5);
    std::string last_error;
    double retry_after = 0.0;
    bool rate_limited = false;
    for (int attempt = 1; attempt <= options_.max_attempts; ++attempt) {
      ++requests_;
      httplib::Client client(origin_);
      const auto timeout = std::chrono::duration<double>(options_.timeout_seconds);
      client.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
      client.set_connection_timeout(std::chrono::seconds(10));
      httplib::Headers headers;
      if (!options_.api_key.empty()) headers.emplace("Authorization", "Bearer " + options_.api_key);
      auto res = client.Post(prefix_ + path, headers, body.dump(), "application/json");
      rate_limited = false;
      if (!res) {
        last_error = "transport error: " + httplib::to_string(res.error());
      } else if (res->status == 429) {
        rate_limited = true;
        retry_after = res->has_header("Retry-After") ? std::atof(res->get_header_value("Retry-After").c_str()) : 0.0;
        last_error = "rate limited (HTTP 429)";
      } else if (res->status >= 500) {
        last_error = "server error HTTP " + std::to_string(res->status);
      } else if (res->status >= 400) {
        throw Error(ErrorKind::Backend, "HTTP " + std::to_string(res->status) + " from " + path + ": " + res->body);
      } else {
        try {
          return json::parse(res->body);
        } catch (const json::parse_error& e) {
          throw Error(ErrorKind::Backend, std::string("undecodable response from ") + path + ": " + e.what());
        }
      }
      if (attempt < options_.max_attempts) {
        double wait = options_.initial_backoff_seconds * std::pow(2.0, attempt - 1) * jitter(jitter_rng);
        if (rate_limited) wait = std::max(wait, retry_after);
        options_.sleep(wait);
      }
    }
    if (rate_limited) throw RateLimitError(last_error + " after " + std::to_string(options_.max_attempts) + " attempts", retry_after);
    throw Error(ErrorKind::Transport, last_error + " after " + std::to_string(options_.max_attempts) + " attempts");
  }

  const HttpOptions& options() const { return options_; }
  std::size_t requests() const { return requests_.load(); }

 private:
  struct Slot {
    explicit Slot(std::counting_semaphore<>& s) : sem(s) { sem.acquire(); }
    ~Slot() { sem.release(); }
    std::counting_semaphore<>& sem;
  };

  HttpOptions options_;
  std::string origin_;
  std::string prefix_;
  std::counting_semaphore<> slots_;
  std::atomic<std::size_t> requests_{0};
};

// Chat-completion endpoint; used for passage sampling and for judging.
class HttpGenerator : public Generator {
 public:
  HttpGenerator(HttpClient& client, std::string model, std::string system_message = "")
      : client_(&client), model_(std::move(model)), system_(std::move(system_message)) {}

  // A system message changes the replies, so it is folded into the identity.
  std::string id() const override {
    if (system_.empty()) return "http-" + model_;
    return "http-" + model_ + "-sys" + sha256_hex(system_).substr(0, 8);
  }

 protected:
  std::vector<std::string> do_generate(const std::string& prompt, double temperature, std::size_t n) override {
    json messages = json::array();
    if (!system_.empty()) messages.push_back({{"role", "system"}, {"content", system_}});
    messages.push_back({{"role", "user"}, {"content", prompt}});
    const json body{{"model", model_}, {"messages", messages}, {"temperature", temperature}, {"n", n}};
    const auto r = client_->post("/chat/completions", body);
    std::vector<std::string> out;
    try {
      for (const auto& c : r.at("choices")) out.push_back(c.at("message").at("content").get<std::string>());
    } catch (const json::exception& e) {
      throw Error(ErrorKind::Backend, std::string("malformed chat completion: ") + e.what());
    }
    return out;
  }

 private:
  HttpClient* client_;
  std::string model_;
  std::string system_;
};

// Completion endpoint with echo + logprobs. The context and text are sent as
// one prompt; only tokens starting at or after the end of the context are kept.
class HttpTokenScorer : public TokenScorer {
 public:
  HttpTokenScorer(HttpClient& client, std::string model) : client_(&client), model_(std::move(model)) {}

  std::string id() const override { return "http-" + model_; }

 protected:
  std::vector<TokenScore> do_score_tokens(const std::string& text, const std::string& context) override {
    const auto limit = client_->options().max_text_chars;
    if (text.size() + context.size() > limit) {
      throw Error(ErrorKind::Precondition, "text-too-long: limit is " + std::to_string(limit) + " characters");
    }
    const json body{{"model", model_}, {"prompt", context + text}, {"echo", true}, {"logprobs", 5}, {"max_tokens", 0}};
    const auto r = client_->post("/completions", body);
    const double to_nats = std::log(client_->options().logprob_base);
    std::vector<TokenScore> out;
    try {
      const auto& lp = r.at("choices").at(0).at("logprobs");
      const auto& tokens = lp.at("tokens");
      const auto& token_lp = lp.at("token_logprobs");
      const bool has_offsets = lp.contains("text_offset");
      const bool has_top = lp.contains("top_logprobs");
      std::size_t offset = 0;
      for (std::size_t i = 0; i < tokens.size(); ++i) {
        const auto tok = tokens[i].get<std::string>();
        const std::size_t start = has_offsets ? lp["text_offset"][i].get<std::size_t>() : offset;
        offset = start + tok.size();
        if (start < context.size()) {
          if (offset > context.size()) throw Error(ErrorKind::Backend, "token straddles the context/text boundary");
          continue;
        }
        TokenScore ts;
        ts.token = tok;
        // The first token of a prompt has no conditional probability.
        ts.logprob = token_lp[i].is_null() ? 0.0 : token_lp[i].get<double>() * to_nats;
        if (has_top && !lp["top_logprobs"][i].is_null()) {
          std::vector<TopToken> top;
          for (const auto& [alt, alt_lp] : lp["top_logprobs"][i].items()) {
            top.push_back({alt, std::exp(alt_lp.get<double>() * to_nats)});
          }
          std::sort(top.begin(), top.end(), [](const TopToken& a, const TopToken& b) { return a.prob > b.prob; });
          if (top.size() > 5) top.resize(5);
          ts.topk = std::move(top);
        }
        out.push_back(std::move(ts));
      }
    } catch (const json::exception& e) {
      throw Error(ErrorKind::Backend, std::string("malformed logprobs response: ") + e.what());
    }
    return out;
  }

 private:
  HttpClient* client_;
  std::string model_;
};

// Generic POST /score endpoint shared by similarity, NLI and QA.
class HttpScoringBackend : public SimilarityScorer, public NliScorer, public QaBackend {
 public:
  HttpScoringBackend(HttpClient& client, std::string model) : client_(&client), model_(std::move(model)) {}

  std::string id() const override { return "http-" + model_; }

 protected:
  double do_similarity(const std::string& candidate, const std::string& reference) override {
    return call({{"task", "similarity"}, {"candidate", candidate}, {"reference", reference}}, [](const json& r) {
      return r.at("score").get<double>();
    });
  }

  NliLogits do_nli(const std::string& premise, const std::string& hypothesis) override {
    return call({{"task", "nli"}, {"premise", premise}, {"hypothesis", hypothesis}}, [](const json& r) {
      return NliLogits{r.at("entail").get<double>(), r.at("contradict").get<double>()};
    });
  }

  QaGeneration do_qa_generate(const std::string& sentence, const std::string& passage,
                              std::size_t n_questions) override {
    return call({{"task", "qa_generate"}, {"sentence", sentence}, {"passage", passage}, {"n_questions", n_questions}},
                [](const json& r) {
                  QaGeneration g;
                  g.items = r.at("items").get<std::vector<QaItem>>();
                  g.failures = r.value("failures", std::size_t{0});
                  return g;
                });
  }

  QaAnswer do_qa_answer(const QaItem& item, const std::string& context) override {
    return call({{"task", "qa_answer"}, {"question", item.question}, {"options", item.options}, {"context", context}},
                [](const json& r) {
                  return QaAnswer{r.at("answer_index").get<std::size_t>(), r.at("answerability").get<double>()};
                });
  }

 private:
  template <typename Decode>
  std::invoke_result_t<Decode&, const json&> call(json body, Decode&& decode) {
    body["model"] = model_;
    const auto r = client_->post("/score", body);
    try {
      return decode(r);
    } catch (const json::exception& e) {
      throw Error(ErrorKind::Backend, "malformed /score response for task " + body["task"].get<std::string>() +
                                          ": " + e.what());
    }
  }

  HttpClient* client_;
  std::string model_;
};

}  // namespace selfcheck

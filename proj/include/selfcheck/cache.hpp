#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <sstream>
#include <string>

#include "json.hpp"
#include "selfcheck/backends.hpp"
#include "selfcheck/hash.hpp"

namespace selfcheck {

using json = nlohmann::json;

inline void to_json(json& j, const TopToken& t) { j = json{{"token", t.token}, {"prob", t.prob}}; }
inline void from_json(const json& j, TopToken& t) {
  t.token = j.at("token").get<std::string>();
  t.prob = j.at("prob").get<double>();
}

inline void to_json(json& j, const TokenScore& t) {
  j = json{{"token", t.token}, {"logprob", t.logprob}};
  if (t.topk) j["topk"] = *t.topk;
}
inline void from_json(const json& j, TokenScore& t) {
  t.token = j.at("token").get<std::string>();
  t.logprob = j.at("logprob").get<double>();
  if (j.contains("topk")) t.topk = j.at("topk").get<std::vector<TopToken>>();
}

inline void to_json(json& j, const QaItem& q) {
  j = json{{"question", q.question}, {"options", q.options}, {"answer_index", q.gold_index}};
}
inline void from_json(const json& j, QaItem& q) {
  q.question = j.at("question").get<std::string>();
  q.options = j.at("options").get<std::vector<std::string>>();
  q.gold_index = j.at("answer_index").get<std::size_t>();
}

// Content-addressed response store: cache/<backend>/<sha256>.json.
// Readers share a lock; writers are exclusive and publish by rename.
class DiskCache {
 public:
  explicit DiskCache(std::filesystem::path root) : root_(std::move(root)) {}

  static std::string make_key(const std::string& backend, const std::string& operation, const json& request) {
    return sha256_hex(backend + '\n' + operation + '\n' + request.dump());
  }

  std::optional<std::string> get(const std::string& backend, const std::string& key) const {
    std::shared_lock lock(mutex_);
    const auto path = entry_path(backend, key);
    std::ifstream in(path, std::ios::binary);
    if (!in) {
      ++misses_;
      return std::nullopt;
    }
    std::stringstream buf;
    buf << in.rdbuf();
    try {
      auto entry = json::parse(buf.str());
      if (entry.at("key").get<std::string>() != key) throw std::runtime_error("key mismatch");
      ++hits_;
      return entry.at("response").get<std::string>();
    } catch (const std::exception& e) {
      std::cerr << "warning: corrupt cache entry " << path << " treated as miss (" << e.what() << ")\n";
      ++misses_;
      return std::nullopt;
    }
  }

  // Last write wins.
  void put(const std::string& backend, const std::string& key, const std::string& response) {
    std::unique_lock lock(mutex_);
    const auto path = entry_path(backend, key);
    std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) throw Error(ErrorKind::Backend, "cannot write cache entry " + tmp.string());
      out << json{{"key", key}, {"response", response}}.dump();
    }
    std::filesystem::rename(tmp, path);
  }

  const std::filesystem::path& root() const { return root_; }
  std::size_t hits() const { return hits_.load(); }
  std::size_t misses() const { return misses_.load(); }

  std::filesystem::path entry_path(const std::string& backend, const std::string& key) const {
    return root_ / sanitize(backend) / (key + ".json");
  }

 private:
  static std::string sanitize(std::string s) {
    for (auto& c : s)
      if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.')) c = '_';
    return s;
  }

  std::filesystem::path root_;
  mutable std::shared_mutex mutex_;
  mutable std::atomic<std::size_t> hits_{0};
  mutable std::atomic<std::size_t> misses_{0};
};

namespace detail {

template <typename Fn>
json cached_call(DiskCache& cache, const std::string& backend, const std::string& op, const json& request,
                 Fn&& compute) {
  const auto key = DiskCache::make_key(backend, op, request);
  if (auto hit = cache.get(backend, key)) {
    try {
      return json::parse(*hit);
    } catch (const json::parse_error&) {
      std::cerr << "warning: undecodable cached response for " << op << ", recomputing\n";
    }
  }
  json response = compute();
  cache.put(backend, key, response.dump());
  return response;
}

}  // namespace detail

// Caching decorators. Each forwards to the wrapped backend only on a miss.

class CachedGenerator : public Generator {
 public:
  CachedGenerator(Generator& inner, DiskCache& cache) : inner_(&inner), cache_(&cache) {}
  std::string id() const override { return inner_->id(); }

 protected:
  std::vector<std::string> do_generate(const std::string& prompt, double temperature, std::size_t n) override {
    const json request{{"prompt", prompt}, {"temperature", temperature}, {"n", n}};
    return detail::cached_call(*cache_, id(), "generate", request, [&] {
             return json(inner_->generate(prompt, temperature, n));
           }).get<std::vector<std::string>>();
  }

 private:
  Generator* inner_;
  DiskCache* cache_;
};

class CachedTokenScorer : public TokenScorer {
 public:
  CachedTokenScorer(TokenScorer& inner, DiskCache& cache) : inner_(&inner), cache_(&cache) {}
  std::string id() const override { return inner_->id(); }

 protected:
  std::vector<TokenScore> do_score_tokens(const std::string& text, const std::string& context) override {
    const json request{{"text", text}, {"context", context}};
    return detail::cached_call(*cache_, id(), "score_tokens", request, [&] {
             return json(inner_->score_tokens(text, context));
           }).get<std::vector<TokenScore>>();
  }

 private:
  TokenScorer* inner_;
  DiskCache* cache_;
};

class CachedSimilarity : public SimilarityScorer {
 public:
  CachedSimilarity(SimilarityScorer& inner, DiskCache& cache) : inner_(&inner), cache_(&cache) {}
  std::string id() const override { return inner_->id(); }

 protected:
  double do_similarity(const std::string& candidate, const std::string& reference) override {
    const json request{{"candidate", candidate}, {"reference", reference}};
    return detail::cached_call(*cache_, id(), "similarity", request, [&] {
             return json(inner_->similarity(candidate, reference));
           }).get<double>();
  }

 private:
  SimilarityScorer* inner_;
  DiskCache* cache_;
};

class CachedNli : public NliScorer {
 public:
  CachedNli(NliScorer& inner, DiskCache& cache) : inner_(&inner), cache_(&cache) {}
  std::string id() const override { return inner_->id(); }

 protected:
  NliLogits do_nli(const std::string& premise, const std::string& hypothesis) override {
    const json request{{"premise", premise}, {"hypothesis", hypothesis}};
    const auto r = detail::cached_call(*cache_, id(), "nli", request, [&] {
      const auto z = inner_->nli(premise, hypothesis);
      return json{{"entail", z.entail}, {"contradict", z.contradict}};
    });
    return {r.at("entail").get<double>(), r.at("contradict").get<double>()};
  }

 private:
  NliScorer* inner_;
  DiskCache* cache_;
};

class CachedQa : public QaBackend {
 public:
  CachedQa(QaBackend& inner, DiskCache& cache) : inner_(&inner), cache_(&cache) {}
  std::string id() const override { return inner_->id(); }

 protected:
  QaGeneration do_qa_generate(const std::string& sentence, const std::string& passage,
                              std::size_t n_questions) override {
    const json request{{"sentence", sentence}, {"passage", passage}, {"n_questions", n_questions}};
    const auto r = detail::cached_call(*cache_, id(), "qa_generate", request, [&] {
      const auto g = inner_->qa_generate(sentence, passage, n_questions);
      return json{{"items", g.items}, {"failures", g.failures}};
    });
    return {r.at("items").get<std::vector<QaItem>>(), r.at("failures").get<std::size_t>()};
  }

  QaAnswer do_qa_answer(const QaItem& item, const std::string& context) override {
    const json request{{"item", item}, {"context", context}};
    const auto r = detail::cached_call(*cache_, id(), "qa_answer", request, [&] {
      const auto a = inner_->qa_answer(item, context);
      return json{{"answer_index", a.index}, {"answerability", a.answerability}};
    });
    return {r.at("answer_index").get<std::size_t>(), r.at("answerability").get<double>()};
  }

 private:
  QaBackend* inner_;
  DiskCache* cache_;
};

}  // namespace selfcheck

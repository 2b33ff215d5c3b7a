#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "selfcheck/backends.hpp"
#include "selfcheck/cache.hpp"
#include "selfcheck/config.hpp"
#include "selfcheck/consistency.hpp"
#include "selfcheck/dataset.hpp"
#include "selfcheck/eval.hpp"
#include "selfcheck/greybox.hpp"
#include "selfcheck/http_backend.hpp"
#include "selfcheck/ngram.hpp"
#include "selfcheck/qa.hpp"
#include "selfcheck/stub_backends.hpp"

namespace selfcheck {

using json = nlohmann::json;

enum class MethodFamily { BertScore, Qa, Ngram, Nli, Prompt, TokenLogprob, TokenEntropy };

// A scoring method selected by name, e.g. "unigram-max", "3gram-avg", "nli",
// "greybox-max-logprob", "proxy-avg-entropy".
struct Method {
  std::string name;
  MethodFamily family = MethodFamily::Ngram;
  int order = 1;
  bool use_max = true;
  bool proxy = false;

  bool bounded() const {
    return family == MethodFamily::BertScore || family == MethodFamily::Qa || family == MethodFamily::Nli ||
           family == MethodFamily::Prompt;
  }

  bool is_token_metric() const {
    return family == MethodFamily::TokenLogprob || family == MethodFamily::TokenEntropy;
  }

  eval::Aggregation aggregation() const {
    return is_token_metric() && !use_max ? eval::Aggregation::TokenMean : eval::Aggregation::SentenceMean;
  }
};

inline std::vector<std::string> method_name_examples() {
  return {"bertscore",       "qa",          "nli",        "prompt",          "unigram-max",          "unigram-avg",
          "{1..5}gram-max",  "{1..5}gram-avg", "greybox-{avg|max}-{logprob|entropy}",
          "proxy-{avg|max}-{logprob|entropy}"};
}

inline Method parse_method(const std::string& name) {
  auto unknown = [&]() {
    std::string msg = "unknown method '" + name + "'; expected one of:";
    for (const auto& m : method_name_examples()) msg += " " + m;
    return Error(ErrorKind::Validation, msg);
  };
  Method m;
  m.name = name;
  if (name == "bertscore") m.family = MethodFamily::BertScore;
  else if (name == "qa") m.family = MethodFamily::Qa;
  else if (name == "nli") m.family = MethodFamily::Nli;
  else if (name == "prompt") m.family = MethodFamily::Prompt;
  else if (name == "unigram-max" || name == "unigram-avg") {
    m.family = MethodFamily::Ngram;
    m.use_max = name.ends_with("max");
  } else if (name.size() == 9 && name.substr(1, 5) == "gram-" && name[0] >= '1' && name[0] <= '5' &&
             (name.ends_with("max") || name.ends_with("avg"))) {
    m.family = MethodFamily::Ngram;
    m.order = name[0] - '0';
    m.use_max = name.ends_with("max");
  } else {
    for (const char* source : {"greybox", "proxy"}) {
      for (const char* agg : {"avg", "max"}) {
        for (const char* metric : {"logprob", "entropy"}) {
          if (name == std::string(source) + "-" + agg + "-" + metric) {
            m.family = std::string(metric) == "logprob" ? MethodFamily::TokenLogprob : MethodFamily::TokenEntropy;
            m.use_max = std::string(agg) == "max";
            m.proxy = std::string(source) == "proxy";
            return m;
          }
        }
      }
    }
    throw unknown();
  }
  return m;
}

// Owns every backend a run may need, optionally wrapped in the disk cache.
// A null capability means it is not configured.
class BackendSet {
 public:
  BackendSet() = default;
  BackendSet(const BackendSet&) = delete;
  BackendSet& operator=(const BackendSet&) = delete;

  static std::unique_ptr<BackendSet> from_config(const RunConfig& config, HttpOptions http = {}) {
    auto set = std::make_unique<BackendSet>();
    if (!config.cache_dir.empty()) set->cache_ = std::make_unique<DiskCache>(config.cache_dir);
    if (config.backend == "stub") {
      auto gen = std::make_unique<StubGenerator>(config.seed);
      auto judge = std::make_unique<StubGenerator>(config.seed);
      auto tok = std::make_unique<StubTokenScorer>(10, 5, "stub-token-scorer");
      auto proxy = std::make_unique<StubTokenScorer>(50, 5, "stub-proxy-scorer");
      auto sim = std::make_unique<StubSimilarity>();
      auto nli = std::make_unique<StubNli>();
      auto qa = std::make_unique<StubQa>();
      set->stub_gen_ = gen.get();
      set->stub_judge_ = judge.get();
      set->stub_tok_ = tok.get();
      set->stub_proxy_ = proxy.get();
      set->stub_sim_ = sim.get();
      set->stub_nli_ = nli.get();
      set->stub_qa_ = qa.get();
      set->install(std::move(gen), std::move(judge), std::move(tok), std::move(proxy), std::move(sim),
                   std::move(nli), std::move(qa));
    } else {
      http.base_url = config.base_url;
      if (http.api_key.empty()) http.api_key = api_key_from_env();
      http.concurrency = config.concurrency;
      http.max_attempts = config.max_attempts;
      http.initial_backoff_seconds = config.initial_backoff_seconds;
      http.logprob_base = config.logprob_base;
      set->client_ = std::make_unique<HttpClient>(http);
      auto& client = *set->client_;
      std::unique_ptr<Generator> gen, judge;
      std::unique_ptr<TokenScorer> tok, proxy;
      std::unique_ptr<HttpScoringBackend> scoring;
      if (!config.generator_model.empty()) {
        gen = std::make_unique<HttpGenerator>(client, config.generator_model);
        tok = std::make_unique<HttpTokenScorer>(client, config.generator_model);
      }
      if (!config.judge_model.empty()) {
        judge = std::make_unique<HttpGenerator>(client, config.judge_model, config.judge_system_message);
      }
      if (!config.proxy_model.empty()) proxy = std::make_unique<HttpTokenScorer>(client, config.proxy_model);
      if (!config.scorer_model.empty()) scoring = std::make_unique<HttpScoringBackend>(client, config.scorer_model);
      SimilarityScorer* sim = scoring.get();
      NliScorer* nli = scoring.get();
      QaBackend* qa = scoring.get();
      set->scoring_owner_ = std::move(scoring);
      set->install_raw(std::move(gen), std::move(judge), std::move(tok), std::move(proxy), sim, nli, qa);
    }
    return set;
  }

  Generator* generator() { return generator_; }
  Generator* judge_generator() { return judge_; }
  TokenScorer* token_scorer(bool proxy) { return proxy ? proxy_ : tokens_; }
  SimilarityScorer* similarity() { return similarity_; }
  NliScorer* nli() { return nli_; }
  QaBackend* qa() { return qa_; }
  DiskCache* cache() { return cache_.get(); }

  // Calls that reached the underlying backend (network requests for HTTP).
  std::size_t backend_calls() const {
    if (client_) return client_->requests();
    std::size_t n = 0;
    if (stub_gen_) n += stub_gen_->calls() + stub_judge_->calls() + stub_tok_->calls() + stub_proxy_->calls() +
                        stub_sim_->calls() + stub_nli_->calls() + stub_qa_->calls();
    return n;
  }

  std::string describe(const Method& m) {
    switch (m.family) {
      case MethodFamily::BertScore: return similarity_ ? similarity_->id() : "";
      case MethodFamily::Qa: return qa_ ? qa_->id() : "";
      case MethodFamily::Nli: return nli_ ? nli_->id() : "";
      case MethodFamily::Prompt: return judge_ ? judge_->id() : "";
      case MethodFamily::Ngram: return "ngram";
      case MethodFamily::TokenLogprob:
      case MethodFamily::TokenEntropy: {
        auto* s = token_scorer(m.proxy);
        return s ? s->id() : "";
      }
    }
    return "";
  }

  // Lists methods whose backend is missing. Called before any request.
  void check_methods(const std::vector<Method>& methods) {
    std::string missing;
    for (const auto& m : methods) {
      if (m.family != MethodFamily::Ngram && describe(m).empty()) missing += " " + m.name;
    }
    if (!missing.empty()) {
      throw Error(ErrorKind::Validation, "no backend configured for method(s):" + missing);
    }
  }

 private:
  void install(std::unique_ptr<Generator> gen, std::unique_ptr<Generator> judge, std::unique_ptr<TokenScorer> tok,
               std::unique_ptr<TokenScorer> proxy, std::unique_ptr<SimilarityScorer> sim,
               std::unique_ptr<NliScorer> nli, std::unique_ptr<QaBackend> qa) {
    SimilarityScorer* s = sim.get();
    NliScorer* n = nli.get();
    QaBackend* q = qa.get();
    sim_owner_ = std::move(sim);
    nli_owner_ = std::move(nli);
    qa_owner_ = std::move(qa);
    install_raw(std::move(gen), std::move(judge), std::move(tok), std::move(proxy), s, n, q);
  }

  void install_raw(std::unique_ptr<Generator> gen, std::unique_ptr<Generator> judge, std::unique_ptr<TokenScorer> tok,
                   std::unique_ptr<TokenScorer> proxy, SimilarityScorer* sim, NliScorer* nli, QaBackend* qa) {
    gen_owner_ = std::move(gen);
    judge_owner_ = std::move(judge);
    tok_owner_ = std::move(tok);
    proxy_owner_ = std::move(proxy);
    generator_ = wrap(gen_owner_.get(), cached_gen_);
    judge_ = wrap(judge_owner_.get(), cached_judge_);
    tokens_ = wrap(tok_owner_.get(), cached_tok_);
    proxy_ = wrap(proxy_owner_.get(), cached_proxy_);
    similarity_ = wrap(sim, cached_sim_);
    nli_ = wrap(nli, cached_nli_);
    qa_ = wrap(qa, cached_qa_);
  }

  template <typename Cached, typename Base>
  Base* wrap(Base* inner, std::unique_ptr<Cached>& holder) {
    if (!inner || !cache_) return inner;
    holder = std::make_unique<Cached>(*inner, *cache_);
    return holder.get();
  }

  std::unique_ptr<DiskCache> cache_;
  std::unique_ptr<HttpClient> client_;

  std::unique_ptr<Generator> gen_owner_, judge_owner_;
  std::unique_ptr<TokenScorer> tok_owner_, proxy_owner_;
  std::unique_ptr<SimilarityScorer> sim_owner_;
  std::unique_ptr<NliScorer> nli_owner_;
  std::unique_ptr<QaBackend> qa_owner_;
  std::unique_ptr<HttpScoringBackend> scoring_owner_;

  std::unique_ptr<CachedGenerator> cached_gen_, cached_judge_;
  std::unique_ptr<CachedTokenScorer> cached_tok_, cached_proxy_;
  std::unique_ptr<CachedSimilarity> cached_sim_;
  std::unique_ptr<CachedNli> cached_nli_;
  std::unique_ptr<CachedQa> cached_qa_;

  Generator* generator_ = nullptr;
  Generator* judge_ = nullptr;
  TokenScorer* tokens_ = nullptr;
  TokenScorer* proxy_ = nullptr;
  SimilarityScorer* similarity_ = nullptr;
  NliScorer* nli_ = nullptr;
  QaBackend* qa_ = nullptr;

  StubGenerator* stub_gen_ = nullptr;
  StubGenerator* stub_judge_ = nullptr;
  StubTokenScorer* stub_tok_ = nullptr;
  StubTokenScorer* stub_proxy_ = nullptr;
  StubSimilarity* stub_sim_ = nullptr;
  StubNli* stub_nli_ = nullptr;
  StubQa* stub_qa_ = nullptr;
};

// Result for one sentence. `per_sample` keeps the per-evidence-item
// quantities needed to recompute the score on a prefix of the samples.
struct SentenceResult {
  std::optional<double> score;
  std::size_t n_tokens = 0;
  json per_sample;
  std::string note;
};

inline qa::QaOptions qa_options(const RunConfig& c) {
  qa::QaOptions o;
  o.n_questions = c.n_questions;
  o.bayes = {c.beta1, c.beta2};
  o.counting = c.qa_counting == "hard" ? qa::Counting::Hard : qa::Counting::Soft;
  o.answerability_threshold = c.answerability_threshold;
  return o;
}

inline greybox::EntropyOptions entropy_options(const RunConfig& c) {
  return {c.entropy_mode == "exp2bits" ? greybox::EntropyMode::Exp2Bits : greybox::EntropyMode::Nats,
          c.entropy_renormalize};
}

inline json qa_evidence_json(const qa::SentenceEvidence& ev) {
  json questions = json::array();
  for (const auto& q : ev.questions) {
    json m = json::array(), mm = json::array();
    for (const auto& a : q.matches) m.push_back({a.sample_index, a.answerability});
    for (const auto& a : q.mismatches) mm.push_back({a.sample_index, a.answerability});
    questions.push_back({{"matches", m}, {"mismatches", mm}});
  }
  return questions;
}

inline std::vector<qa::QaEvidence> qa_evidence_from_json(const json& j) {
  std::vector<qa::QaEvidence> out;
  for (const auto& q : j) {
    qa::QaEvidence ev;
    for (const auto& a : q.at("matches")) ev.matches.push_back({a.at(0).get<std::size_t>(), a.at(1).get<double>()});
    for (const auto& a : q.at("mismatches")) {
      ev.mismatches.push_back({a.at(0).get<std::size_t>(), a.at(1).get<double>()});
    }
    out.push_back(std::move(ev));
  }
  return out;
}

inline std::vector<SentenceResult> score_ngram(const Method& method, const Passage& passage,
                                               const EvidenceSet& evidence, const RunConfig& config) {
  const ngram::NgramModel model(evidence, passage, {method.order, config.ngram_delta});
  std::vector<SentenceResult> out;
  for (const auto& s : passage.sentences()) {
    SentenceResult r;
    try {
      r.score = method.use_max ? model.score_max(s) : model.score_avg(s);
      r.n_tokens = model.sentence_probs(s).size();
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::Precondition) throw;
      r.note = e.what();
    }
    out.push_back(std::move(r));
  }
  return out;
}

// Scores every sentence of one record with one method.
inline std::vector<SentenceResult> score_passage(const Method& method, const Passage& passage,
                                                 const EvidenceSet& evidence, BackendSet& backends,
                                                 const RunConfig& config) {
  std::vector<SentenceResult> out;
  switch (method.family) {
    case MethodFamily::Ngram:
      return score_ngram(method, passage, evidence, config);
    case MethodFamily::BertScore:
      for (const auto& s : passage.sentences()) {
        const auto maxima = consistency::max_similarities(*backends.similarity(), s, evidence);
        out.push_back({consistency::bertsim_from_maxima(maxima), 0, json(maxima), ""});
      }
      return out;
    case MethodFamily::Nli:
      for (const auto& s : passage.sentences()) {
        const auto probs = consistency::contradiction_probs(*backends.nli(), s, evidence);
        out.push_back({consistency::mean(probs), 0, json(probs), ""});
      }
      return out;
    case MethodFamily::Prompt: {
      const Judge judge(*backends.judge_generator());
      for (std::size_t i = 0; i < passage.size(); ++i) {
        const auto row = consistency::judge_sentence(judge, i, passage.sentences()[i], evidence);
        out.push_back({consistency::mean(row.mapped), 0, json(row.mapped), ""});
      }
      return out;
    }
    case MethodFamily::Qa: {
      const auto options = qa_options(config);
      for (const auto& s : passage.sentences()) {
        SentenceResult r;
        try {
          const auto ev = qa::collect_evidence(*backends.qa(), s, passage, evidence, options);
          r.score = qa::score_sentence(ev, options);
          r.per_sample = qa_evidence_json(ev);
          if (!r.score) r.note = "no-questions";
        } catch (const Error& e) {
          if (std::string(e.what()).rfind("no-questions", 0) != 0) throw;
          r.note = "no-questions";
        }
        out.push_back(std::move(r));
      }
      return out;
    }
    case MethodFamily::TokenLogprob:
    case MethodFamily::TokenEntropy: {
      const auto runs = greybox::score_passage(*backends.token_scorer(method.proxy), passage,
                                               passage_prompt(passage.concept_name()));
      const auto eopt = entropy_options(config);
      for (const auto& run : runs) {
        SentenceResult r;
        r.n_tokens = run.size();
        if (method.family == MethodFamily::TokenLogprob) {
          r.score = method.use_max ? greybox::max_neg_logprob(run) : greybox::avg_neg_logprob(run);
        } else {
          r.score = method.use_max ? greybox::max_entropy(run, eopt) : greybox::avg_entropy(run, eopt);
        }
        out.push_back(std::move(r));
      }
      return out;
    }
  }
  return out;
}

// Recomputes a sentence score from stored per-sample data using only the
// first `n` evidence items. N-gram methods need the raw samples instead and
// token metrics do not depend on samples at all.
inline std::optional<double> rescore_prefix(const Method& method, const json& per_sample, std::size_t n,
                                            const RunConfig& config) {
  require(n >= 1, "sample prefix must be >= 1");
  switch (method.family) {
    case MethodFamily::BertScore:
    case MethodFamily::Nli:
    case MethodFamily::Prompt: {
      auto values = per_sample.get<std::vector<double>>();
      if (n > values.size()) {
        throw Error(ErrorKind::Precondition, "requested " + std::to_string(n) + " samples but only " +
                                                 std::to_string(values.size()) + " were scored");
      }
      values.resize(n);
      if (method.family == MethodFamily::BertScore) return consistency::bertsim_from_maxima(values);
      return consistency::mean(values);
    }
    case MethodFamily::Qa: {
      if (per_sample.is_null()) return std::nullopt;
      const auto options = qa_options(config);
      std::vector<double> scores;
      for (const auto& q : qa_evidence_from_json(per_sample)) scores.push_back(qa::bayes_score(q.prefix(n), options));
      return qa::qa_sentence_score(scores);
    }
    default:
      throw Error(ErrorKind::Precondition, "method " + method.name + " cannot be rescored from stored samples");
  }
}

}  // namespace selfcheck

#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "selfcheck/error.hpp"
#include "selfcheck/hash.hpp"
#include "selfcheck/segment.hpp"

namespace selfcheck {

using json = nlohmann::json;

// Everything that influences a run. The API key is deliberately absent; it
// only ever comes from SELFCHECK_API_KEY.
struct RunConfig {
  // backends
  std::string backend = "stub";  // "stub" or "http"
  std::string base_url = "http://localhost:8000/v1";
  std::string generator_model = "text-davinci-003";
  std::string judge_model = "gpt-3.5-turbo";
  std::string judge_system_message = "You are a helpful assistant.";
  std::string proxy_model = "llama-30b";
  std::string scorer_model = "selfcheck-scorer";
  double logprob_base = 2.718281828459045;
  int concurrency = 4;
  int max_attempts = 3;
  double initial_backoff_seconds = 1.0;
  std::string cache_dir = "cache";
  std::uint64_t seed = 0;

  // sampling
  double temperature_main = 0.0;
  double temperature_samples = 1.0;
  std::size_t n_samples = 20;

  // methods
  std::vector<std::string> methods = {"unigram-max"};
  double ngram_delta = 1e-9;
  double beta1 = 0.8;
  double beta2 = 0.8;
  std::size_t n_questions = 5;
  std::string qa_counting = "soft";  // "soft" or "hard"
  double answerability_threshold = 0.5;
  std::string entropy_mode = "nats";  // "nats" or "exp2bits"
  bool entropy_renormalize = false;

  void validate() const {
    if (backend != "stub" && backend != "http") throw Error(ErrorKind::Validation, "backend must be 'stub' or 'http'");
    if (n_samples < 1) throw Error(ErrorKind::Validation, "n_samples must be >= 1");
    if (temperature_main < 0.0 || temperature_samples < 0.0) {
      throw Error(ErrorKind::Validation, "temperatures must be >= 0");
    }
    if (concurrency < 1) throw Error(ErrorKind::Validation, "concurrency must be >= 1");
    if (max_attempts < 1) throw Error(ErrorKind::Validation, "max_attempts must be >= 1");
    if (!(ngram_delta > 0.0)) throw Error(ErrorKind::Validation, "ngram_delta must be > 0");
    if (!(beta1 > 0.0 && beta1 < 1.0 && beta2 > 0.0 && beta2 < 1.0)) {
      throw Error(ErrorKind::Validation, "beta1 and beta2 must be in (0,1)");
    }
    if (n_questions < 1) throw Error(ErrorKind::Validation, "n_questions must be >= 1");
    if (qa_counting != "soft" && qa_counting != "hard") throw Error(ErrorKind::Validation, "qa_counting must be soft or hard");
    if (entropy_mode != "nats" && entropy_mode != "exp2bits") {
      throw Error(ErrorKind::Validation, "entropy_mode must be nats or exp2bits");
    }
    if (!(logprob_base > 1.0)) throw Error(ErrorKind::Validation, "logprob_base must be > 1");
  }

  json to_json() const {
    return json{{"backend", backend},
                {"base_url", base_url},
                {"generator_model", generator_model},
                {"judge_model", judge_model},
                {"judge_system_message", judge_system_message},
                {"proxy_model", proxy_model},
                {"scorer_model", scorer_model},
                {"logprob_base", logprob_base},
                {"seed", seed},
                {"temperature_main", temperature_main},
                {"temperature_samples", temperature_samples},
                {"n_samples", n_samples},
                {"methods", methods},
                {"ngram_delta", ngram_delta},
                {"beta1", beta1},
                {"beta2", beta2},
                {"n_questions", n_questions},
                {"qa_counting", qa_counting},
                {"answerability_threshold", answerability_threshold},
                {"entropy_mode", entropy_mode},
                {"entropy_renormalize", entropy_renormalize}};
  }

  // Transport knobs (concurrency, retries, cache location) and the method
  // selection do not change any individual score and are left out.
  std::string digest() const {
    auto j = to_json();
    j.erase("methods");
    return sha256_hex(j.dump()).substr(0, 16);
  }

  // Applies one `key = value` setting. Unknown keys are an error.
  void set(const std::string& key, const std::string& value) {
    auto as_double = [&]() {
      try {
        std::size_t used = 0;
        double d = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return d;
      } catch (const std::exception&) {
        throw Error(ErrorKind::Validation, "config key '" + key + "' expects a number, got '" + value + "'");
      }
    };
    auto as_size = [&]() {
      const double d = as_double();
      if (d < 0 || d != static_cast<double>(static_cast<std::uint64_t>(d))) {
        throw Error(ErrorKind::Validation, "config key '" + key + "' expects a non-negative integer");
      }
      return static_cast<std::uint64_t>(d);
    };
    auto as_bool = [&]() {
      if (value == "true") return true;
      if (value == "false") return false;
      throw Error(ErrorKind::Validation, "config key '" + key + "' expects true or false");
    };
    if (key == "backend") backend = value;
    else if (key == "base_url") base_url = value;
    else if (key == "generator_model") generator_model = value;
    else if (key == "judge_model") judge_model = value;
    else if (key == "judge_system_message") judge_system_message = value;
    else if (key == "proxy_model") proxy_model = value;
    else if (key == "scorer_model") scorer_model = value;
    else if (key == "logprob_base") logprob_base = as_double();
    else if (key == "concurrency") concurrency = static_cast<int>(as_size());
    else if (key == "max_attempts") max_attempts = static_cast<int>(as_size());
    else if (key == "initial_backoff_seconds") initial_backoff_seconds = as_double();
    else if (key == "cache_dir") cache_dir = value;
    else if (key == "seed") seed = as_size();
    else if (key == "temperature_main") temperature_main = as_double();
    else if (key == "temperature_samples") temperature_samples = as_double();
    else if (key == "n_samples") n_samples = as_size();
    else if (key == "methods") methods = split_list(value);
    else if (key == "ngram_delta") ngram_delta = as_double();
    else if (key == "beta1") beta1 = as_double();
    else if (key == "beta2") beta2 = as_double();
    else if (key == "n_questions") n_questions = as_size();
    else if (key == "qa_counting") qa_counting = value;
    else if (key == "answerability_threshold") answerability_threshold = as_double();
    else if (key == "entropy_mode") entropy_mode = value;
    else if (key == "entropy_renormalize") entropy_renormalize = as_bool();
    else throw Error(ErrorKind::Validation, "unknown config key '" + key + "'");
  }

  // `key = value` lines; '#' starts a comment; `[section]` headers are
  // accepted and ignored; values may be double-quoted; lists are either
  // comma-separated or written as ["a", "b"].
  void load(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      const auto hash = line.find('#');
      if (hash != std::string::npos && line.find('"') > hash) line.erase(hash);
      const auto t = std::string(detail::trim(line));
      if (t.empty() || t.front() == '[') continue;
      const auto eq = t.find('=');
      if (eq == std::string::npos) {
        throw Error(ErrorKind::Validation, "config line " + std::to_string(line_no) + ": expected key = value");
      }
      auto key = std::string(detail::trim(std::string_view(t).substr(0, eq)));
      auto value = std::string(detail::trim(std::string_view(t).substr(eq + 1)));
      if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
      try {
        set(key, value);
      } catch (const Error& e) {
        throw Error(ErrorKind::Validation, "config line " + std::to_string(line_no) + ": " + e.what());
      }
    }
  }

  void load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Validation, "cannot open config file: " + path);
    load(in);
  }

  static std::vector<std::string> split_list(std::string value) {
    if (!value.empty() && value.front() == '[' && value.back() == ']') value = value.substr(1, value.size() - 2);
    std::vector<std::string> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
      auto t = std::string(detail::trim(item));
      if (t.size() >= 2 && t.front() == '"' && t.back() == '"') t = t.substr(1, t.size() - 2);
      if (!t.empty()) out.push_back(t);
    }
    return out;
  }
};

}  // namespace selfcheck

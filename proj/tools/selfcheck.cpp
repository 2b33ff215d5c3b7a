// selfcheck: sample | score | eval | synth
//
// Exit codes: 0 success, 1 usage or validation error, 2 backend failure.

#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "selfcheck/selfcheck.hpp"

namespace {

using namespace selfcheck;

struct Output {
  std::unique_ptr<std::ofstream> file;
  std::ostream* stream = &std::cout;

  explicit Output(const std::string& path) {
    if (path.empty() || path == "-") return;
    file = std::make_unique<std::ofstream>(path);
    if (!*file) throw Error(ErrorKind::Validation, "cannot write " + path);
    stream = file.get();
  }
};

std::size_t parse_size(const std::string& s) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(s, &used);
    if (used != s.size() || v < 0) throw std::invalid_argument(s);
    return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
    throw Error(ErrorKind::Validation, "expected a non-negative integer, got '" + s + "'");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sampling-based hallucination detection for generated passages"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  std::string backend, cache_dir, methods, base_url;
  std::size_t n_samples = 0;
  std::uint64_t seed = 0;
  int concurrency = 0;
  bool no_cache = false;
  app.add_option("--config", config_path, "config file (key = value lines)");
  app.add_option("--set", overrides, "override a config key: key=value (repeatable)");
  app.add_option("--backend", backend, "stub or http");
  app.add_option("--base-url", base_url, "HTTP backend base URL");
  app.add_option("--cache-dir", cache_dir, "response cache directory");
  app.add_flag("--no-cache", no_cache, "disable the response cache");
  auto* seed_opt = app.add_option("--seed", seed, "seed for stub backends");
  auto* n_opt = app.add_option("-N,--n-samples", n_samples, "samples per concept");
  app.add_option("--methods", methods, "comma-separated scoring methods");
  auto* conc_opt = app.add_option("--concurrency", concurrency, "parallel requests / passages");

  auto* sample = app.add_subcommand("sample", "generate a main response and N samples per concept");
  std::string concepts_file, sample_out;
  std::vector<std::string> concept_args;
  sample->add_option("--concepts-file", concepts_file, "file with one concept per line");
  sample->add_option("concept", concept_args, "concept names");
  sample->add_option("-o,--out", sample_out, "output dataset JSONL (default stdout)");

  auto* score = app.add_subcommand("score", "score every sentence with the selected methods");
  std::string score_dataset, score_out, evidence = "samples";
  score->add_option("dataset", score_dataset, "dataset JSONL")->required();
  score->add_option("-o,--out", score_out, "output scores JSONL (default stdout)");
  score->add_option("--evidence", evidence, "samples or reference");

  auto* evalc = app.add_subcommand("eval", "AUC-PR and passage correlations from a scores file");
  commands::EvalOptions eval_options;
  std::string sweep;
  evalc->add_option("scores", eval_options.scores_path, "scores JSONL")->required();
  evalc->add_option("dataset", eval_options.dataset_path, "labelled dataset JSONL")->required();
  evalc->add_option("-o,--report", eval_options.report_path, "report JSON (default stdout)");
  evalc->add_option("--curves-dir", eval_options.curves_dir, "directory for PR-curve and sweep CSVs");
  evalc->add_option("--sweep-n", sweep, "comma-separated sample counts, e.g. 1,5,10,20");
  evalc->add_flag("--force", eval_options.force, "accept scores produced under a different config");

  auto* synthc = app.add_subcommand("synth", "write a synthetic labelled corpus");
  synth::SynthSpec spec;
  std::string synth_out;
  synthc->add_option("-o,--out", synth_out, "output dataset JSONL (default stdout)");
  synthc->add_option("--concepts", spec.n_concepts, "number of passages");
  synthc->add_option("--sentences", spec.sentences_per_passage, "sentences per passage");
  synthc->add_option("--tokens", spec.tokens_per_sentence, "tokens per sentence");
  synthc->add_option("--halluc-rate", spec.halluc_rate, "share of hallucinated sentences");
  synthc->add_option("--noise", spec.consistency_noise, "consistency noise in [0,1]");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    RunConfig config;
    if (!config_path.empty()) config.load_file(config_path);
    for (const auto& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw Error(ErrorKind::Validation, "--set expects key=value, got '" + kv + "'");
      config.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (!backend.empty()) config.backend = backend;
    if (!base_url.empty()) config.base_url = base_url;
    if (!cache_dir.empty()) config.cache_dir = cache_dir;
    if (no_cache) config.cache_dir.clear();
    if (!methods.empty()) config.methods = RunConfig::split_list(methods);
    if (*seed_opt) config.seed = seed;
    if (*n_opt) config.n_samples = n_samples;
    if (*conc_opt) config.concurrency = concurrency;
    config.validate();

    if (*synthc) {
      spec.seed = config.seed;
      spec.n_samples = config.n_samples;
      Output out(synth_out);
      const auto n = commands::cmd_synth(spec, *out.stream);
      std::cerr << "synth: wrote " << n << " records\n";
      return 0;
    }
    if (*sample) {
      std::vector<std::string> concepts = concept_args;
      if (!concepts_file.empty()) {
        const auto more = commands::read_lines(concepts_file);
        concepts.insert(concepts.end(), more.begin(), more.end());
      }
      if (concepts.empty()) throw Error(ErrorKind::Validation, "sample: no concepts given");
      auto backends = BackendSet::from_config(config);
      Output out(sample_out);
      const auto summary = commands::cmd_sample(config, *backends, concepts, *out.stream);
      std::cerr << "sample: wrote " << summary.written << " records, " << summary.failed.size() << " failed\n";
      return summary.failed.empty() ? 0 : 2;
    }
    if (*score) {
      const auto mode = commands::parse_evidence_mode(evidence);
      auto backends = BackendSet::from_config(config);
      Output out(score_out);
      const auto summary = commands::cmd_score(config, *backends, score_dataset, mode, *out.stream);
      std::cerr << "score: wrote " << summary.rows << " rows (" << summary.missing << " without a score)\n";
      return 0;
    }
    if (*evalc) {
      if (!sweep.empty()) {
        for (const auto& s : RunConfig::split_list(sweep)) eval_options.sweep_n.push_back(parse_size(s));
      }
      const auto report = commands::cmd_eval(config, eval_options);
      if (eval_options.report_path.empty()) std::cout << report.dump(2) << '\n';
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.is_backend_failure() ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

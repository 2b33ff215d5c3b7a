// Synthetic corpus -> unigram-max and stub NLI scores -> AUC-PR per task.

#include <iostream>

#include "selfcheck/selfcheck.hpp"

int main() {
  using namespace selfcheck;
  synth::SynthSpec spec;
  spec.n_concepts = 30;
  spec.consistency_noise = 0.4;
  spec.seed = 7;
  const auto corpus = synth::generate_corpus(spec);

  RunConfig config;
  config.cache_dir.clear();
  auto backends = BackendSet::from_config(config);

  for (const char* name : {"unigram-max", "nli"}) {
    const auto method = parse_method(name);
    std::vector<eval::ScoredPassage> data;
    for (const auto& record : corpus) {
      eval::ScoredPassage sp{&record.passage, {}, {}};
      for (const auto& r : score_passage(method, record.passage, record.sampled_evidence(), *backends, config)) {
        sp.scores.push_back(r.score);
        sp.token_counts.push_back(r.n_tokens);
      }
      data.push_back(std::move(sp));
    }
    const auto report = eval::evaluate(data, method.aggregation());
    std::cout << name;
    for (const auto& [task, result] : report.tasks) {
      std::cout << "  " << eval::task_name(task) << "=";
      if (result.pr) std::cout << result.pr->average_precision * 100.0;
      else std::cout << "n/a";
    }
    if (report.passage.spearman) std::cout << "  spearman=" << *report.passage.spearman;
    std::cout << '\n';
  }
}

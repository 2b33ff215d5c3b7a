#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "selfcheck/config.hpp"
#include "selfcheck/dataset.hpp"
#include "selfcheck/eval.hpp"
#include "selfcheck/methods.hpp"
#include "selfcheck/parallel.hpp"
#include "selfcheck/synth.hpp"

namespace selfcheck::commands {

using json = nlohmann::json;

inline std::string file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Validation, "cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return sha256_hex(buf.str()).substr(0, 16);
}

inline std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Validation, "cannot open " + path);
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    auto t = std::string(detail::trim(line));
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

// ---- sample -------------------------------------------------------------------

struct SampleSummary {
  std::size_t written = 0;
  std::vector<std::string> failed;
};

// One greedy response plus N stochastic samples per concept.
inline SampleSummary cmd_sample(const RunConfig& config, BackendSet& backends, const std::vector<std::string>& concepts,
                                std::ostream& out) {
  config.validate();
  auto* gen = backends.generator();
  if (!gen) throw Error(ErrorKind::Validation, "sample: no generator backend configured");
  SampleSummary summary;
  for (const auto& c : concepts) {
    try {
      const auto prompt = passage_prompt(c);
      const auto main = gen->generate(prompt, config.temperature_main, 1).front();
      const auto samples = gen->generate(prompt, config.temperature_samples, config.n_samples);
      DatasetRecord r{Passage::from_response(c, main), samples, std::nullopt, config.digest()};
      out << record_to_json(r).dump() << '\n';
      ++summary.written;
    } catch (const Error& e) {
      if (!e.is_backend_failure()) throw;
      std::cerr << "sample: '" << c << "' failed: " << e.what() << '\n';
      summary.failed.push_back(c);
    }
  }
  return summary;
}

// ---- score --------------------------------------------------------------------

enum class EvidenceMode { Samples, Reference };

inline EvidenceMode parse_evidence_mode(const std::string& s) {
  if (s == "samples") return EvidenceMode::Samples;
  if (s == "reference") return EvidenceMode::Reference;
  throw Error(ErrorKind::Validation, "evidence mode must be 'samples' or 'reference'");
}

inline json score_row(const DatasetRecord& record, std::size_t sent_idx, const Method& method,
                      const SentenceResult& r, const std::string& backend, const std::string& config_digest,
                      const std::string& dataset_digest, EvidenceMode mode) {
  json row{{"concept", record.passage.concept_name()},
           {"sent_idx", sent_idx},
           {"method", method.name},
           {"score", r.score ? json(*r.score) : json(nullptr)},
           {"bounded", method.bounded()},
           {"backend", backend},
           {"evidence", mode == EvidenceMode::Samples ? "samples" : "reference"},
           {"config_digest", config_digest},
           {"dataset_digest", dataset_digest}};
  if (r.n_tokens) row["n_tokens"] = r.n_tokens;
  if (!r.per_sample.is_null()) row["per_sample"] = r.per_sample;
  if (!r.note.empty()) row["note"] = r.note;
  return row;
}

struct ScoreSummary {
  std::size_t rows = 0;
  std::size_t missing = 0;
};

// Scores every sentence of every record with every configured method.
// Passages run concurrently; rows are written in dataset order.
inline ScoreSummary cmd_score(const RunConfig& config, BackendSet& backends, const std::string& dataset_path,
                              EvidenceMode mode, std::ostream& out) {
  config.validate();
  std::vector<Method> methods;
  for (const auto& name : config.methods) methods.push_back(parse_method(name));
  if (methods.empty()) throw Error(ErrorKind::Validation, "score: no methods selected");
  backends.check_methods(methods);

  std::vector<std::string> warnings;
  const auto records = load_dataset(dataset_path, &warnings);
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
  std::vector<EvidenceSet> evidence;
  for (const auto& r : records) {
    evidence.push_back(mode == EvidenceMode::Samples ? r.sampled_evidence() : r.reference_evidence());
  }
  const auto config_digest = config.digest();
  const auto dataset_digest = file_digest(dataset_path);

  std::vector<std::vector<json>> rows(records.size());
  parallel_for(records.size(), config.concurrency, [&](std::size_t i) {
    for (const auto& m : methods) {
      const auto results = score_passage(m, records[i].passage, evidence[i], backends, config);
      const auto backend = backends.describe(m);
      for (std::size_t s = 0; s < results.size(); ++s) {
        rows[i].push_back(score_row(records[i], s, m, results[s], backend, config_digest, dataset_digest, mode));
      }
    }
  });
  ScoreSummary summary;
  for (const auto& passage_rows : rows) {
    for (const auto& row : passage_rows) {
      out << row.dump() << '\n';
      ++summary.rows;
      if (row["score"].is_null()) ++summary.missing;
    }
  }
  return summary;
}

// ---- eval ---------------------------------------------------------------------

struct ScoreRow {
  std::string concept_name;
  std::size_t sent_idx = 0;
  std::string method;
  std::optional<double> score;
  std::size_t n_tokens = 0;
  json per_sample;
  std::string config_digest;
  std::string dataset_digest;
  std::string evidence;
};

inline std::vector<ScoreRow> load_scores(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Validation, "cannot open scores file: " + path);
  std::vector<ScoreRow> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    try {
      const auto j = json::parse(line);
      ScoreRow r;
      r.concept_name = j.at("concept").get<std::string>();
      r.sent_idx = j.at("sent_idx").get<std::size_t>();
      r.method = j.at("method").get<std::string>();
      if (!j.at("score").is_null()) r.score = j.at("score").get<double>();
      r.n_tokens = j.value("n_tokens", std::size_t{0});
      if (j.contains("per_sample")) r.per_sample = j["per_sample"];
      r.config_digest = j.value("config_digest", "");
      r.dataset_digest = j.value("dataset_digest", "");
      r.evidence = j.value("evidence", "samples");
      rows.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw Error(ErrorKind::Validation, "scores line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return rows;
}

struct EvalOptions {
  std::string scores_path;
  std::string dataset_path;
  std::string report_path;
  std::string curves_dir;  // empty: no CSV output
  std::vector<std::size_t> sweep_n;
  bool force = false;
};

inline json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

inline json method_report_json(const eval::MethodReport& r) {
  json tasks = json::object();
  for (const auto& [task, tr] : r.tasks) {
    json curve = json::array();
    if (tr.pr)
      for (const auto& p : tr.pr->curve) curve.push_back({p.recall, p.precision});
    tasks[eval::task_name(task)] = {{"auc_pr", tr.pr ? json(tr.pr->average_precision) : json(nullptr)},
                                    {"curve", curve},
                                    {"positives", tr.positives},
                                    {"negatives", tr.negatives}};
  }
  const auto& c = r.counts;
  return {{"tasks", tasks},
          {"passage",
           {{"pearson", optional_json(r.passage.pearson)},
            {"spearman", optional_json(r.passage.spearman)},
            {"passages", r.passage.passages}}},
          {"counts",
           {{"passages", c.passages},
            {"sentences", c.sentences},
            {"accurate", c.accurate},
            {"minor_inaccurate", c.minor_inaccurate},
            {"major_inaccurate", c.major_inaccurate},
            {"nonfact_star_passages", c.nonfact_star_passages},
            {"nonfact_star_sentences", c.nonfact_star_sentences},
            {"missing_scores", c.missing_scores}}}};
}

struct SweepRow {
  std::size_t n = 0;
  eval::MethodReport report;
};

namespace detail {

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Validation, "cannot write " + path.string());
  out << text;
}

inline std::string fmt(const std::optional<double>& v) {
  if (!v) return "";
  std::ostringstream s;
  s.precision(10);
  s << *v;
  return s.str();
}

}  // namespace detail

// Builds per-method reports (and optional sample-count sweeps) from a scores
// file and the labelled dataset it was computed on.
inline json cmd_eval(const RunConfig& config, const EvalOptions& options) {
  config.validate();
  const auto records = load_dataset(options.dataset_path);
  for (const auto& r : records) {
    if (!r.passage.has_labels()) {
      throw Error(ErrorKind::Validation, "eval: passage '" + r.passage.concept_name() + "' has no labels");
    }
  }
  const auto rows = load_scores(options.scores_path);
  const auto config_digest = config.digest();
  const auto dataset_digest = file_digest(options.dataset_path);
  for (const auto& row : rows) {
    if (options.force) break;
    if (row.config_digest != config_digest) {
      throw Error(ErrorKind::Validation, "eval: scores were produced with config " + row.config_digest +
                                             " but the current config is " + config_digest + " (use --force)");
    }
    if (row.dataset_digest != dataset_digest) {
      throw Error(ErrorKind::Validation, "eval: scores were computed on a different dataset (use --force)");
    }
  }

  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < records.size(); ++i) index[records[i].passage.concept_name()] = i;
  std::map<std::string, std::vector<const ScoreRow*>> by_method;
  std::vector<std::string> method_order;
  for (const auto& row : rows) {
    if (!by_method.count(row.method)) method_order.push_back(row.method);
    by_method[row.method].push_back(&row);
  }

  json report{{"config_digest", config_digest}, {"dataset_digest", dataset_digest}, {"methods", json::object()}};
  for (const auto& name : method_order) {
    const auto method = parse_method(name);
    std::vector<eval::ScoredPassage> data(records.size());
    std::vector<std::vector<const ScoreRow*>> row_of(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
      data[i].passage = &records[i].passage;
      data[i].scores.assign(records[i].passage.size(), std::nullopt);
      data[i].token_counts.assign(records[i].passage.size(), 0);
      row_of[i].assign(records[i].passage.size(), nullptr);
    }
    std::vector<bool> seen(records.size(), false);
    for (const auto* row : by_method[name]) {
      const auto it = index.find(row->concept_name);
      if (it == index.end()) throw Error(ErrorKind::Validation, "eval: unknown concept '" + row->concept_name + "'");
      auto& sp = data[it->second];
      if (row->sent_idx >= sp.scores.size()) throw Error(ErrorKind::Validation, "eval: sentence index out of range");
      sp.scores[row->sent_idx] = row->score;
      sp.token_counts[row->sent_idx] = row->n_tokens;
      row_of[it->second][row->sent_idx] = row;
      seen[it->second] = true;
    }
    std::vector<eval::ScoredPassage> scored;
    std::vector<std::size_t> scored_idx;
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (!seen[i]) continue;
      scored.push_back(data[i]);
      scored_idx.push_back(i);
    }
    const auto full = eval::evaluate(scored, method.aggregation());
    report["methods"][name] = method_report_json(full);

    if (!options.curves_dir.empty()) {
      for (const auto& [task, tr] : full.tasks) {
        std::ostringstream csv;
        csv << "recall,precision\n";
        if (tr.pr)
          for (const auto& p : tr.pr->curve) csv << detail::fmt(p.recall) << ',' << detail::fmt(p.precision) << '\n';
        detail::write_text(std::filesystem::path(options.curves_dir) / (name + "." + eval::task_name(task) + ".csv"),
                           csv.str());
      }
    }

    if (options.sweep_n.empty()) continue;
    json sweep = json::array();
    std::ostringstream csv;
    csv << "n,nonfact,nonfact_star,factual,pearson,spearman\n";
    for (std::size_t n : options.sweep_n) {
      if (n == 0) throw Error(ErrorKind::Validation, "eval: sweep sizes must be >= 1");
      auto prefix = scored;
      for (std::size_t k = 0; k < prefix.size(); ++k) {
        const auto& record = records[scored_idx[k]];
        const bool reference = row_of[scored_idx[k]].front() && row_of[scored_idx[k]].front()->evidence == "reference";
        const auto available = reference ? std::size_t{1} : record.samples.size();
        if (n > available) {
          throw Error(ErrorKind::Validation, "eval: sweep size " + std::to_string(n) + " exceeds the " +
                                                 std::to_string(available) + " samples of '" +
                                                 record.passage.concept_name() + "'");
        }
        if (method.is_token_metric()) continue;
        if (method.family == MethodFamily::Ngram) {
          const auto ev = reference ? record.reference_evidence() : record.sampled_evidence().prefix(n);
          const auto results = score_ngram(method, record.passage, ev, config);
          for (std::size_t s = 0; s < results.size(); ++s) prefix[k].scores[s] = results[s].score;
          continue;
        }
        for (std::size_t s = 0; s < prefix[k].scores.size(); ++s) {
          const auto* row = row_of[scored_idx[k]][s];
          if (!row || !row->score) continue;
          prefix[k].scores[s] = rescore_prefix(method, row->per_sample, n, config);
        }
      }
      const auto r = eval::evaluate(prefix, method.aggregation());
      auto ap = [&](eval::Task t) -> std::optional<double> {
        const auto& tr = r.tasks.at(t);
        return tr.pr ? std::optional<double>(tr.pr->average_precision) : std::nullopt;
      };
      sweep.push_back({{"n", n},
                       {"nonfact", optional_json(ap(eval::Task::NonFact))},
                       {"nonfact_star", optional_json(ap(eval::Task::NonFactStar))},
                       {"factual", optional_json(ap(eval::Task::Factual))},
                       {"pearson", optional_json(r.passage.pearson)},
                       {"spearman", optional_json(r.passage.spearman)}});
      csv << n << ',' << detail::fmt(ap(eval::Task::NonFact)) << ',' << detail::fmt(ap(eval::Task::NonFactStar))
          << ',' << detail::fmt(ap(eval::Task::Factual)) << ',' << detail::fmt(r.passage.pearson) << ','
          << detail::fmt(r.passage.spearman) << '\n';
    }
    report["sweep"][name] = sweep;
    if (!options.curves_dir.empty()) {
      detail::write_text(std::filesystem::path(options.curves_dir) / ("sweep_" + name + ".csv"), csv.str());
    }
  }
  if (!options.report_path.empty()) detail::write_text(options.report_path, report.dump(2) + "\n");
  return report;
}

// ---- synth --------------------------------------------------------------------

inline std::size_t cmd_synth(const synth::SynthSpec& spec, std::ostream& out) {
  const auto records = synth::generate_corpus(spec);
  write_dataset(out, records);
  return records.size();
}

}  // namespace selfcheck::commands

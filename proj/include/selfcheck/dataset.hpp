#pragma once

#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "selfcheck/core.hpp"
#include "selfcheck/error.hpp"

namespace selfcheck {

using json = nlohmann::json;

// One line of the dataset JSONL file.
struct DatasetRecord {
  Passage passage;
  std::vector<std::string> samples;
  std::optional<std::string> reference;
  std::optional<std::string> config_digest;

  bool has_samples() const { return !samples.empty(); }

  EvidenceSet sampled_evidence() const {
    if (samples.empty()) {
      throw Error(ErrorKind::Validation, "record '" + passage.concept_name() + "' has no samples");
    }
    return EvidenceSet::sampled(samples);
  }

  EvidenceSet reference_evidence() const {
    if (!reference || detail::trim(*reference).empty()) {
      throw Error(ErrorKind::Validation, "record '" + passage.concept_name() + "' has no reference field");
    }
    return EvidenceSet::reference(*reference);
  }

  friend bool operator==(const DatasetRecord&, const DatasetRecord&) = default;
};

inline json record_to_json(const DatasetRecord& r) {
  json j;
  j["concept"] = r.passage.concept_name();
  j["response"] = r.passage.response();
  j["sentences"] = r.passage.sentences();
  if (r.passage.labels()) {
    json labels = json::array();
    for (auto l : *r.passage.labels()) labels.push_back(std::string(label_name(l)));
    j["labels"] = labels;
  }
  if (!r.samples.empty()) j["samples"] = r.samples;
  if (r.reference) j["reference"] = *r.reference;
  if (r.config_digest) j["config_digest"] = *r.config_digest;
  return j;
}

namespace detail {

inline const std::vector<std::string>& known_record_fields() {
  static const std::vector<std::string> fields = {"concept", "response", "sentences", "labels",
                                                  "samples", "reference", "config_digest"};
  return fields;
}

inline std::vector<std::string> string_array(const json& j, const char* field) {
  if (!j.is_array()) throw Error(ErrorKind::Validation, std::string("field '") + field + "' must be an array");
  std::vector<std::string> out;
  for (const auto& v : j) {
    if (!v.is_string()) throw Error(ErrorKind::Validation, std::string("field '") + field + "' must hold strings");
    out.push_back(v.get<std::string>());
  }
  return out;
}

}  // namespace detail

inline DatasetRecord record_from_json(const json& j, std::vector<std::string>* warnings = nullptr) {
  if (!j.is_object()) throw Error(ErrorKind::Validation, "malformed-JSON: record is not an object");
  for (const char* field : {"concept", "response"}) {
    if (!j.contains(field)) throw Error(ErrorKind::Validation, std::string("missing-field: ") + field);
    if (!j[field].is_string()) throw Error(ErrorKind::Validation, std::string("field '") + field + "' must be a string");
  }
  if (warnings) {
    for (const auto& item : j.items()) {
      const auto& known = detail::known_record_fields();
      if (std::find(known.begin(), known.end(), item.key()) == known.end()) {
        warnings->push_back("unknown field '" + item.key() + "' ignored");
      }
    }
  }
  auto concept_name = j["concept"].get<std::string>();
  auto response = j["response"].get<std::string>();

  std::optional<std::vector<SentenceLabel>> labels;
  if (j.contains("labels") && !j["labels"].is_null()) {
    labels.emplace();
    for (const auto& name : detail::string_array(j["labels"], "labels")) {
      auto l = parse_label(name);
      if (!l) throw Error(ErrorKind::Validation, "unknown label '" + name + "'");
      labels->push_back(*l);
    }
  }

  std::optional<Passage> passage;
  if (j.contains("sentences") && !j["sentences"].is_null()) {
    passage.emplace(concept_name, response, detail::string_array(j["sentences"], "sentences"), labels);
  } else {
    passage.emplace(Passage::from_response(concept_name, response, labels));
  }

  DatasetRecord record{std::move(*passage), {}, std::nullopt, std::nullopt};
  if (j.contains("samples") && !j["samples"].is_null()) record.samples = detail::string_array(j["samples"], "samples");
  if (j.contains("reference") && !j["reference"].is_null()) {
    if (!j["reference"].is_string()) throw Error(ErrorKind::Validation, "field 'reference' must be a string");
    record.reference = j["reference"].get<std::string>();
  }
  if (j.contains("config_digest") && j["config_digest"].is_string()) {
    record.config_digest = j["config_digest"].get<std::string>();
  }
  return record;
}

// Parses a whole JSONL document. All per-line errors are collected and
// reported together; nothing is returned unless every line is valid.
inline std::vector<DatasetRecord> parse_dataset(std::istream& in, std::vector<std::string>* warnings = nullptr) {
  std::vector<DatasetRecord> records;
  std::vector<std::string> errors;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    try {
      json j;
      try {
        j = json::parse(line);
      } catch (const json::parse_error& e) {
        throw Error(ErrorKind::Validation, std::string("malformed-JSON: ") + e.what());
      }
      std::vector<std::string> local;
      records.push_back(record_from_json(j, warnings ? &local : nullptr));
      if (warnings) {
        for (auto& w : local) warnings->push_back("line " + std::to_string(line_no) + ": " + w);
      }
    } catch (const Error& e) {
      errors.push_back("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!errors.empty()) {
    std::ostringstream msg;
    msg << "dataset rejected (" << errors.size() << " invalid record" << (errors.size() == 1 ? "" : "s") << ")";
    for (const auto& e : errors) msg << "\n  " << e;
    throw Error(ErrorKind::Validation, msg.str());
  }
  return records;
}

inline std::vector<DatasetRecord> load_dataset(const std::string& path, std::vector<std::string>* warnings = nullptr) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Validation, "cannot open dataset: " + path);
  return parse_dataset(in, warnings);
}

inline void write_dataset(std::ostream& out, const std::vector<DatasetRecord>& records) {
  for (const auto& r : records) out << record_to_json(r).dump() << '\n';
}

inline void save_dataset(const std::string& path, const std::vector<DatasetRecord>& records) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Validation, "cannot write dataset: " + path);
  write_dataset(out, records);
}

}  // namespace selfcheck

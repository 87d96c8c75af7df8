#pragma once

// Caption -> ground-truth answer key. For each category the first mapping
// rule (in schema order) that matches the caption's first sentence decides
// the letter; categories with no match fall back to the "does not apply"
// default and mark the scenario for human curation.

#include <cctype>
#include <istream>
#include <map>
#include <optional>
#include <regex>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sceneval/core/scenario.hpp"
#include "sceneval/core/schema.hpp"

namespace sceneval {

struct CategoryMatch {
  char letter = 'A';
  bool defaulted = true;
  std::size_t rule_index = 0; // meaningful only when !defaulted
  std::string pattern;
  std::string span;
  std::size_t offset = 0;

  friend bool operator==(const CategoryMatch &, const CategoryMatch &) = default;
};

struct GroundTruth {
  std::string scenario_id;
  AnswerKey key;
  std::vector<CategoryMatch> matches;
  bool needs_curation = false;

  friend bool operator==(const GroundTruth &, const GroundTruth &) = default;
};

inline void to_json(nlohmann::json &j, const GroundTruth &g) {
  nlohmann::json matches = nlohmann::json::array();
  for (const auto &m : g.matches) {
    if (m.defaulted)
      matches.push_back({{"letter", std::string(1, m.letter)}, {"defaulted", true}});
    else
      matches.push_back({{"letter", std::string(1, m.letter)},
                         {"defaulted", false},
                         {"pattern", m.pattern},
                         {"span", m.span},
                         {"offset", m.offset}});
  }
  j = nlohmann::json{{"scenario_id", g.scenario_id},
                     {"key", g.key.str()},
                     {"needs_curation", g.needs_curation},
                     {"matches", matches}};
}

inline void from_json(const nlohmann::json &j, GroundTruth &g) {
  g.scenario_id = j.value("scenario_id", std::string());
  g.key = AnswerKey(j.at("key").get<std::string>());
  g.needs_curation = j.value("needs_curation", false);
  g.matches.clear();
  if (auto it = j.find("matches"); it != j.end()) {
    for (const auto &mj : *it) {
      CategoryMatch m;
      m.letter = mj.at("letter").get<std::string>().at(0);
      m.defaulted = mj.value("defaulted", true);
      m.pattern = mj.value("pattern", std::string());
      m.span = mj.value("span", std::string());
      m.offset = mj.value("offset", std::size_t{0});
      g.matches.push_back(std::move(m));
    }
  }
}

/// Text up to and including the first '.', '!' or '?' that ends a sentence.
inline std::string first_sentence(const std::string &text) {
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if ((c == '.' || c == '!' || c == '?') &&
        (i + 1 == text.size() || std::isspace(static_cast<unsigned char>(text[i + 1]))))
      return text.substr(0, i + 1);
  }
  return text;
}

/// A schema with its mapping rules compiled once; immutable and shareable.
class Extractor {
public:
  explicit Extractor(AnnotationSchema schema) : schema_(std::move(schema)) {
    for (const auto &cat : schema_.categories()) {
      std::vector<std::regex> compiled;
      for (const auto &rule : cat.rules)
        compiled.emplace_back("\\b(?:" + rule.pattern + ")\\b", std::regex::ECMAScript | std::regex::icase);
      rules_.push_back(std::move(compiled));
    }
  }

  const AnnotationSchema &schema() const { return schema_; }

  GroundTruth extract(const std::string &caption, const std::string &scenario_id = {}) const {
    if (caption.empty()) throw std::invalid_argument("caption must be non-empty");
    const std::string sentence = first_sentence(caption);
    GroundTruth gt;
    gt.scenario_id = scenario_id;
    std::string letters;
    for (std::size_t c = 0; c < schema_.size(); ++c) {
      const auto &cat = schema_.category(c);
      CategoryMatch m;
      m.letter = cat.default_letter;
      for (std::size_t r = 0; r < rules_[c].size(); ++r) {
        std::smatch hit;
        if (std::regex_search(sentence, hit, rules_[c][r])) {
          m.letter = cat.rules[r].letter;
          m.defaulted = false;
          m.rule_index = r;
          m.pattern = cat.rules[r].pattern;
          m.span = hit.str(0);
          m.offset = static_cast<std::size_t>(hit.position(0));
          break;
        }
      }
      if (m.defaulted) gt.needs_curation = true;
      letters.push_back(m.letter);
      gt.matches.push_back(std::move(m));
    }
    gt.key = AnswerKey(std::move(letters));
    return gt;
  }

private:
  AnnotationSchema schema_;
  std::vector<std::vector<std::regex>> rules_;
};

inline GroundTruth extract(const std::string &caption, const AnnotationSchema &schema) {
  return Extractor(schema).extract(caption);
}

struct ExtractionSummary {
  std::size_t scenarios = 0;
  std::size_t fully_matched = 0;
  std::size_t needs_curation = 0;
  std::map<std::string, std::size_t> key_counts;
  /// [category][option index] -> count
  std::vector<std::vector<std::size_t>> option_counts;
  std::vector<LineError> errors;

  std::size_t distinct_keys() const { return key_counts.size(); }
};

struct ExtractionResult {
  std::vector<GroundTruth> truths;
  ExtractionSummary summary;
};

inline ExtractionResult extract_manifest(const Manifest &manifest, const AnnotationSchema &schema) {
  Extractor ex(schema);
  ExtractionResult out;
  out.summary.errors = manifest.errors;
  for (const auto &cat : schema.categories()) out.summary.option_counts.emplace_back(cat.options.size(), 0);
  for (const auto &s : manifest.scenarios) {
    auto gt = ex.extract(s.caption, s.scenario_id);
    ++out.summary.scenarios;
    ++(gt.needs_curation ? out.summary.needs_curation : out.summary.fully_matched);
    ++out.summary.key_counts[gt.key.str()];
    for (std::size_t c = 0; c < schema.size(); ++c)
      ++out.summary.option_counts[c][schema.category(c).option_index(gt.key[c])];
    out.truths.push_back(std::move(gt));
  }
  return out;
}

inline nlohmann::json summary_to_json(const ExtractionSummary &s, const AnnotationSchema &schema) {
  nlohmann::json cats = nlohmann::json::array();
  for (std::size_t c = 0; c < schema.size(); ++c) {
    nlohmann::json counts = nlohmann::json::object();
    const auto &cat = schema.category(c);
    for (std::size_t o = 0; o < cat.options.size(); ++o)
      counts[std::string(1, cat.options[o].letter)] = {{"label", cat.options[o].label},
                                                       {"count", s.option_counts[c][o]}};
    cats.push_back({{"name", cat.name}, {"options", counts}});
  }
  nlohmann::json errors = nlohmann::json::array();
  for (const auto &e : s.errors) errors.push_back({{"line", e.line}, {"message", e.message}});
  return {{"schema_id", schema.schema_id()},
          {"scenarios", s.scenarios},
          {"fully_matched", s.fully_matched},
          {"needs_curation", s.needs_curation},
          {"distinct_keys", s.distinct_keys()},
          {"key_counts", s.key_counts},
          {"categories", cats},
          {"errors", errors}};
}

/// Ground truths keyed by scenario id, read from extractor JSONL output.
inline std::map<std::string, GroundTruth> load_ground_truths(std::istream &in) {
  std::map<std::string, GroundTruth> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto gt = nlohmann::json::parse(line).get<GroundTruth>();
    out[gt.scenario_id] = std::move(gt);
  }
  return out;
}

} // namespace sceneval

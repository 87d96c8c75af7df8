#pragma once

// Annotation schemas (ordered multiple-choice categories plus the caption
// mapping rules that produce ground truth) and answer keys.

#include <cctype>
#include <cstddef>
#include <fstream>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "sceneval/core/error.hpp"

namespace sceneval {

struct Option {
  char letter = 'A';
  std::string label;

  friend bool operator==(const Option &, const Option &) = default;
};

/// `pattern` is an ECMAScript regex fragment matched case-insensitively and
/// anchored on word boundaries; plain phrases ("high speed") are the norm.
struct MappingRule {
  std::string pattern;
  char letter = 'A';

  friend bool operator==(const MappingRule &, const MappingRule &) = default;
};

struct Category {
  std::string name;
  std::string short_name;
  std::string question;
  std::vector<Option> options;
  std::vector<MappingRule> rules;
  char default_letter = 'A';

  bool has_letter(char c) const {
    return !options.empty() && c >= 'A' && c < static_cast<char>('A' + options.size());
  }
  std::size_t option_index(char c) const { return static_cast<std::size_t>(c - 'A'); }
  const std::string &label(char c) const { return options.at(option_index(c)).label; }

  friend bool operator==(const Category &, const Category &) = default;
};

class AnnotationSchema {
public:
  AnnotationSchema() = default;
  AnnotationSchema(std::string schema_id, std::vector<Category> categories)
      : schema_id_(std::move(schema_id)), categories_(std::move(categories)) {
    validate();
  }

  const std::string &schema_id() const { return schema_id_; }
  const std::vector<Category> &categories() const { return categories_; }
  const Category &category(std::size_t i) const { return categories_.at(i); }
  std::size_t size() const { return categories_.size(); }

  /// Letters of every category's "does not apply" option, in order.
  std::string default_letters() const {
    std::string out;
    for (const auto &c : categories_) out.push_back(c.default_letter);
    return out;
  }

  friend bool operator==(const AnnotationSchema &, const AnnotationSchema &) = default;

private:
  void validate() const {
    if (schema_id_.empty()) throw SchemaError("schema_id", "must be non-empty");
    if (categories_.empty()) throw SchemaError("categories", "at least one category is required");
    for (std::size_t i = 0; i < categories_.size(); ++i) {
      const auto &c = categories_[i];
      const std::string at = "categories[" + std::to_string(i) + "]";
      if (c.name.empty()) throw SchemaError(at + ".name", "must be non-empty");
      if (c.options.empty()) throw SchemaError(at + ".options", "at least one option is required");
      if (c.options.size() > 26) throw SchemaError(at + ".options", "more than 26 options");
      for (std::size_t k = 0; k < c.options.size(); ++k) {
        if (c.options[k].letter != static_cast<char>('A' + k))
          throw SchemaError(at + ".options", "letters must be consecutive from 'A'");
      }
      if (!c.has_letter(c.default_letter))
        throw SchemaError(at + ".default", std::string("letter '") + c.default_letter + "' is not an option");
      for (std::size_t r = 0; r < c.rules.size(); ++r) {
        const std::string rat = at + ".rules[" + std::to_string(r) + "]";
        if (c.rules[r].pattern.empty()) throw SchemaError(rat + ".pattern", "must be non-empty");
        if (!c.has_letter(c.rules[r].letter))
          throw SchemaError(rat + ".letter", std::string("letter '") + c.rules[r].letter + "' is not an option");
        try {
          std::regex probe(c.rules[r].pattern, std::regex::ECMAScript | std::regex::icase);
        } catch (const std::regex_error &e) {
          throw SchemaError(rat + ".pattern", std::string("invalid pattern: ") + e.what());
        }
      }
    }
  }

  std::string schema_id_;
  std::vector<Category> categories_;
};

/// Ordered option letters, one per schema category ("AABACBB").
class AnswerKey {
public:
  AnswerKey() = default;
  explicit AnswerKey(std::string letters) : letters_(std::move(letters)) {}

  const std::string &str() const { return letters_; }
  std::size_t size() const { return letters_.size(); }
  char operator[](std::size_t i) const { return letters_[i]; }

  friend bool operator==(const AnswerKey &, const AnswerKey &) = default;
  friend auto operator<=>(const AnswerKey &, const AnswerKey &) = default;

private:
  std::string letters_;
};

enum class KeyFault { None, Length, Letter };

struct KeyVerdict {
  KeyFault fault = KeyFault::None;
  /// 1-based category position of the first bad letter; 0 for length faults.
  std::size_t position = 0;
  std::string message;

  bool valid() const { return fault == KeyFault::None; }
  explicit operator bool() const { return valid(); }
};

inline KeyVerdict validate_key(std::string_view key, const AnnotationSchema &schema) {
  if (key.size() != schema.size()) {
    return {KeyFault::Length, 0,
            "key has " + std::to_string(key.size()) + " letters, schema has " +
                std::to_string(schema.size()) + " categories"};
  }
  for (std::size_t i = 0; i < key.size(); ++i) {
    if (!schema.category(i).has_letter(key[i])) {
      return {KeyFault::Letter, i + 1,
              std::string("letter '") + key[i] + "' at position " + std::to_string(i + 1) +
                  " is not an option of '" + schema.category(i).name + "'"};
    }
  }
  return {};
}

inline KeyVerdict validate_key(const AnswerKey &key, const AnnotationSchema &schema) {
  return validate_key(std::string_view(key.str()), schema);
}

/// Decodes a key string, throwing SchemaError("key[i]") on the first bad position.
inline AnswerKey decode_key(std::string_view text, const AnnotationSchema &schema) {
  auto verdict = validate_key(text, schema);
  if (!verdict.valid())
    throw SchemaError(verdict.fault == KeyFault::Length ? "key" : "key[" + std::to_string(verdict.position) + "]",
                      verdict.message);
  return AnswerKey(std::string(text));
}

inline std::string encode_key(const AnswerKey &key) { return key.str(); }

// JSON ----------------------------------------------------------------------

inline nlohmann::json schema_to_json(const AnnotationSchema &schema) {
  nlohmann::json cats = nlohmann::json::array();
  for (const auto &c : schema.categories()) {
    nlohmann::json options = nlohmann::json::object();
    for (const auto &o : c.options) options[std::string(1, o.letter)] = o.label;
    nlohmann::json rules = nlohmann::json::array();
    for (const auto &r : c.rules) rules.push_back({{"pattern", r.pattern}, {"letter", std::string(1, r.letter)}});
    cats.push_back({{"name", c.name},
                    {"short", c.short_name},
                    {"question", c.question},
                    {"options", options},
                    {"rules", rules},
                    {"default", std::string(1, c.default_letter)}});
  }
  return {{"schema_id", schema.schema_id()}, {"categories", cats}};
}

namespace detail {

inline const nlohmann::json &require(const nlohmann::json &j, const char *key, const std::string &at) {
  auto it = j.find(key);
  if (it == j.end()) throw SchemaError(at + "." + key, "missing");
  return *it;
}

inline std::string require_string(const nlohmann::json &j, const char *key, const std::string &at) {
  const auto &v = require(j, key, at);
  if (!v.is_string()) throw SchemaError(at + "." + key, "must be a string");
  return v.get<std::string>();
}

inline char require_letter(const nlohmann::json &v, const std::string &at) {
  if (!v.is_string() || v.get_ref<const std::string &>().size() != 1 ||
      !std::isupper(static_cast<unsigned char>(v.get_ref<const std::string &>()[0])))
    throw SchemaError(at, "must be a single upper-case letter");
  return v.get_ref<const std::string &>()[0];
}

} // namespace detail

inline AnnotationSchema schema_from_json(const nlohmann::json &j) {
  if (!j.is_object()) throw SchemaError("$", "schema must be a JSON object");
  std::string id = detail::require_string(j, "schema_id", "$");
  const auto &cats = detail::require(j, "categories", "$");
  if (!cats.is_array()) throw SchemaError("$.categories", "must be an array");
  std::vector<Category> categories;
  for (std::size_t i = 0; i < cats.size(); ++i) {
    const std::string at = "categories[" + std::to_string(i) + "]";
    const auto &cj = cats[i];
    if (!cj.is_object()) throw SchemaError(at, "must be an object");
    Category c;
    c.name = detail::require_string(cj, "name", at);
    c.short_name = cj.value("short", c.name);
    c.question = detail::require_string(cj, "question", at);
    const auto &opts = detail::require(cj, "options", at);
    if (!opts.is_object()) throw SchemaError(at + ".options", "must be an object of letter -> label");
    for (auto it = opts.begin(); it != opts.end(); ++it) {
      const std::string oat = at + ".options." + it.key();
      if (it.key().size() != 1) throw SchemaError(oat, "option keys must be single letters");
      if (!it.value().is_string()) throw SchemaError(oat, "label must be a string");
      c.options.push_back({it.key()[0], it.value().get<std::string>()});
    }
    if (auto r = cj.find("rules"); r != cj.end()) {
      if (!r->is_array()) throw SchemaError(at + ".rules", "must be an array");
      for (std::size_t k = 0; k < r->size(); ++k) {
        const std::string rat = at + ".rules[" + std::to_string(k) + "]";
        const auto &rj = (*r)[k];
        if (!rj.is_object()) throw SchemaError(rat, "must be an object");
        c.rules.push_back({detail::require_string(rj, "pattern", rat),
                           detail::require_letter(detail::require(rj, "letter", rat), rat + ".letter")});
      }
    }
    c.default_letter = detail::require_letter(detail::require(cj, "default", at), at + ".default");
    categories.push_back(std::move(c));
  }
  return AnnotationSchema(std::move(id), std::move(categories));
}

/// Loads a schema file. JSON syntax errors carry the byte offset; structural
/// errors carry the JSON location.
inline AnnotationSchema load_schema(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open schema file " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error &e) {
    throw SchemaError("byte " + std::to_string(e.byte), e.what());
  }
  return schema_from_json(j);
}

// Built-in CoVLA schema ------------------------------------------------------

/// Seven ego-vehicle categories for CoVLA first-sentence captions. Each
/// category ends with a "does not apply" option, which is its default.
/// Rules are tried in order. The trailing motion-verb rules encode that a
/// moving-vehicle caption which omits following, acceleration, traffic lights
/// or curvature describes their absence; an explicit "not moving" rule comes
/// first so the negation never reaches them.
inline AnnotationSchema default_covla_schema() {
  const std::string moving =
      "moving|driving|traveling|travelling|turning|accelerating|decelerating|slowing down|speeding up";
  const std::string at_rest = "not moving";
  std::vector<Category> cats;
  cats.push_back({"motion_state",
                  "Mot.",
                  "What is the motion state of the ego vehicle?",
                  {{'A', "moving"}, {'B', "stopping"}, {'C', "stopped"}, {'D', "does not apply / none of the above"}},
                  {{"not moving|stopped|at a standstill|stationary|at rest", 'C'},
                   {"stopping|coming to a stop|about to stop|pulling to a stop", 'B'},
                   {moving, 'A'}},
                  'D'});
  cats.push_back({"direction",
                  "Dir.",
                  "In which direction is the ego vehicle moving?",
                  {{'A', "straight"}, {'B', "left"}, {'C', "right"}, {'D', "does not apply / none of the above"}},
                  {{"(?:turning|turns|turn|veering|bearing|curving|moving|heading) (?:to the )?left|left turn", 'B'},
                   {"(?:turning|turns|turn|veering|bearing|curving|moving|heading) (?:to the )?right|right turn", 'C'},
                   {"straight", 'A'}},
                  'D'});
  cats.push_back({"velocity",
                  "Spd.",
                  "How fast is the ego vehicle moving?",
                  {{'A', "very high speed"},
                   {'B', "high speed"},
                   {'C', "moderate speed"},
                   {'D', "low speed"},
                   {'E', "does not apply / none of the above"}},
                  {{"very high speed|very fast", 'A'},
                   {"high speed|fast", 'B'},
                   {"moderate speed|medium speed|normal speed", 'C'},
                   {"low speed|slow speed|slowly|slow", 'D'}},
                  'E'});
  cats.push_back({"following",
                  "Fol.",
                  "Is the ego vehicle following another vehicle?",
                  {{'A', "not following"}, {'B', "following"}, {'C', "does not apply / none of the above"}},
                  {{"not following|without following|no (?:vehicle|car)s? ahead", 'A'},
                   {"following|behind (?:a|another|the) (?:car|vehicle|truck|bus)", 'B'},
                   {at_rest, 'C'},
                   {moving, 'A'}},
                  'C'});
  cats.push_back({"acceleration",
                  "Accel.",
                  "How is the ego vehicle's speed changing?",
                  {{'A', "accelerating (positive)"},
                   {'B', "decelerating (negative)"},
                   {'C', "constant speed (zero)"},
                   {'D', "does not apply / none of the above"}},
                  {{"accelerating|speeding up", 'A'},
                   {"decelerating|slowing down|braking|stopping", 'B'},
                   {"constant speed|steady speed|maintaining (?:its |a )?speed", 'C'},
                   {at_rest, 'D'},
                   {moving, 'C'}},
                  'D'});
  cats.push_back({"traffic_light",
                  "TL",
                  "Is there a traffic light relevant to the ego vehicle?",
                  {{'A', "traffic light present"}, {'B', "no traffic light"}, {'C', "does not apply / none of the above"}},
                  {{"no traffic lights?|without (?:a )?traffic lights?", 'B'},
                   {"traffic lights?|traffic signals?|red light|green light|yellow light", 'A'},
                   {at_rest, 'C'},
                   {moving, 'B'}},
                  'C'});
  cats.push_back({"curvature",
                  "Crv.",
                  "Is the ego vehicle moving along a curved road?",
                  {{'A', "curved road"}, {'B', "no curve"}, {'C', "does not apply / none of the above"}},
                  {{"straight road", 'B'}, {"curves?|curved|curving|bend|winding", 'A'}, {at_rest, 'C'}, {moving, 'B'}},
                  'C'});
  return AnnotationSchema("covla-ego-7", std::move(cats));
}

} // namespace sceneval

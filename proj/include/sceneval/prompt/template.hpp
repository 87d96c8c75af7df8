#pragma once

// Prompt templates: plain text with {name} placeholders, one variant per
// presentation mode. A template is shared by every model under evaluation.

#include <cctype>
#include <fstream>
#include <map>
#include <string>

#include <nlohmann/json.hpp>

#include "sceneval/core/error.hpp"

namespace sceneval {

using PlaceholderMap = std::map<std::string, std::string>;

/// Substitutes every {identifier}. A brace not opening an identifier is kept
/// literally; an identifier without a value throws ConfigError.
inline std::string render_placeholders(const std::string &text, const PlaceholderMap &values) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size();) {
    if (text[i] == '{') {
      std::size_t j = i + 1;
      while (j < text.size() && (std::isalnum(static_cast<unsigned char>(text[j])) || text[j] == '_')) ++j;
      if (j > i + 1 && j < text.size() && text[j] == '}') {
        const std::string name = text.substr(i + 1, j - i - 1);
        auto it = values.find(name);
        if (it == values.end()) throw ConfigError("prompt template: no value for placeholder {" + name + "}");
        out += it->second;
        i = j + 1;
        continue;
      }
    }
    out.push_back(text[i++]);
  }
  return out;
}

struct PromptTemplate {
  std::string template_id;
  std::string system;
  std::string user;
  /// Keys: collage, separate, batch and their *_single variants for one frame.
  std::map<std::string, std::string> mode_clauses;
  std::string question;
  std::string option;
  std::string answer_format;
  std::string batch_turn;

  friend bool operator==(const PromptTemplate &, const PromptTemplate &) = default;
};

inline PromptTemplate template_from_json(const nlohmann::json &j) {
  PromptTemplate t;
  try {
    t.template_id = j.at("template_id").get<std::string>();
    t.system = j.at("system").get<std::string>();
    t.user = j.at("user").get<std::string>();
    t.mode_clauses = j.at("mode_clauses").get<std::map<std::string, std::string>>();
    t.question = j.at("question").get<std::string>();
    t.option = j.at("option").get<std::string>();
    t.answer_format = j.at("answer_format").get<std::string>();
    t.batch_turn = j.at("batch_turn").get<std::string>();
  } catch (const nlohmann::json::exception &e) {
    throw ConfigError(std::string("prompt template: ") + e.what());
  }
  for (const char *k : {"collage", "collage_single", "separate", "separate_single", "batch", "batch_single"})
    if (!t.mode_clauses.count(k)) throw ConfigError(std::string("prompt template: missing mode clause '") + k + "'");
  return t;
}

inline nlohmann::json template_to_json(const PromptTemplate &t) {
  return {{"template_id", t.template_id}, {"system", t.system},   {"user", t.user},
          {"mode_clauses", t.mode_clauses}, {"question", t.question}, {"option", t.option},
          {"answer_format", t.answer_format}, {"batch_turn", t.batch_turn}};
}

inline PromptTemplate load_template(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open prompt template " + path);
  try {
    return template_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error &e) {
    throw ConfigError("prompt template " + path + ": " + e.what());
  }
}

/// Same content as data/prompts/default.json.
inline const PromptTemplate &default_template() {
  static const PromptTemplate t = template_from_json(nlohmann::json::parse(R"json({
  "template_id": "sceneval-default-v1",
  "system": "You are an expert in autonomous driving scenario analysis. You will be shown images representing sequential driving scenarios and must classify them according to specific categories.",
  "user": "{mode_clause}\n\nThese images are from the ego vehicle's perspective. Answer the following {category_count} questions about the driving scenario, choosing exactly one option per question.\n\n{questions}\n\n{answer_format}",
  "mode_clauses": {
    "collage": "You are viewing a {rows}×{cols} grid of images showing a driving scenario captured at {interval_ms} ms intervals. The images are arranged chronologically from left to right, top to bottom.",
    "collage_single": "You are viewing a single image showing a driving scenario.",
    "separate": "You are viewing {frame_count} separate images showing a driving scenario captured at {interval_ms} ms intervals. The images are attached in chronological order, earliest first.",
    "separate_single": "You are viewing a single image showing a driving scenario.",
    "batch": "You have been shown {frame_count} images one at a time, showing a driving scenario captured at {interval_ms} ms intervals. The images were sent in chronological order, earliest first.",
    "batch_single": "You have been shown a single image showing a driving scenario."
  },
  "question": "{index}. {question}\n{options}",
  "option": "   {letter}) {label}",
  "answer_format": "You may explain your reasoning. End your response with a short answer key in the format: {key_format}",
  "batch_turn": "Image {index} of {frame_count}, captured at {time_ms} ms. Wait for the remaining images before answering."
})json"));
  return t;
}

} // namespace sceneval

#pragma once

// Renders the system and user prompts for one sampling configuration.

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sceneval/core/config.hpp"
#include "sceneval/core/schema.hpp"
#include "sceneval/prompt/template.hpp"

namespace sceneval {

/// One attachment slot. Collage bundles have a single "collage" role; the
/// other modes have one "frame" role per sampled frame, in time order.
struct ImageRole {
  std::string kind;
  int index = 0;
  int time_ms = 0;
  std::string description;

  friend bool operator==(const ImageRole &, const ImageRole &) = default;
};

struct PromptBundle {
  std::string template_id;
  PresentationMode mode = PresentationMode::Collage;
  std::string system_text;
  std::string user_text;
  std::vector<ImageRole> image_roles;
  /// Batch mode only: text sent with each image except the last, whose turn
  /// carries user_text.
  std::vector<std::string> batch_turns;

  friend bool operator==(const PromptBundle &, const PromptBundle &) = default;
};

inline void to_json(nlohmann::json &j, const PromptBundle &b) {
  nlohmann::json roles = nlohmann::json::array();
  for (const auto &r : b.image_roles)
    roles.push_back({{"kind", r.kind}, {"index", r.index}, {"time_ms", r.time_ms}, {"description", r.description}});
  j = {{"template_id", b.template_id},
       {"mode", std::string(to_string(b.mode))},
       {"system", b.system_text},
       {"user", b.user_text},
       {"image_roles", roles},
       {"batch_turns", b.batch_turns}};
}

inline void from_json(const nlohmann::json &j, PromptBundle &b) {
  b.template_id = j.value("template_id", std::string());
  b.mode = parse_presentation_mode(j.at("mode").get<std::string>());
  b.system_text = j.at("system").get<std::string>();
  b.user_text = j.at("user").get<std::string>();
  b.image_roles.clear();
  for (const auto &r : j.value("image_roles", nlohmann::json::array()))
    b.image_roles.push_back({r.at("kind"), r.at("index"), r.value("time_ms", 0), r.value("description", "")});
  b.batch_turns = j.value("batch_turns", std::vector<std::string>{});
}

/// "1) [letter] 2) [letter] ... n) [letter]"; every item is spelled out for n <= 3.
inline std::string key_format_hint(std::size_t n) {
  auto item = [](std::size_t i) { return std::to_string(i) + ") [letter]"; };
  if (n <= 3) {
    std::string out;
    for (std::size_t i = 1; i <= n; ++i) out += (i > 1 ? " " : "") + item(i);
    return out;
  }
  return item(1) + " " + item(2) + " ... " + item(n);
}

inline std::string render_questions(const AnnotationSchema &schema, const PromptTemplate &t) {
  std::string out;
  for (std::size_t i = 0; i < schema.size(); ++i) {
    const auto &cat = schema.category(i);
    std::string options;
    for (std::size_t k = 0; k < cat.options.size(); ++k) {
      if (k) options += "\n";
      options += render_placeholders(
          t.option, {{"letter", std::string(1, cat.options[k].letter)}, {"label", cat.options[k].label}});
    }
    if (i) out += "\n\n";
    out += render_placeholders(t.question,
                               {{"index", std::to_string(i + 1)}, {"question", cat.question}, {"options", options}});
  }
  return out;
}

inline PromptBundle build_prompt(const SamplingConfig &config, const AnnotationSchema &schema,
                                 const PromptTemplate &t = default_template()) {
  config.validate();
  PlaceholderMap values{{"rows", std::to_string(config.grid.rows)},
                        {"cols", std::to_string(config.grid.cols)},
                        {"interval_ms", std::to_string(config.interval_ms)},
                        {"frame_count", std::to_string(config.frame_count)},
                        {"category_count", std::to_string(schema.size())},
                        {"width", std::to_string(config.resolution.width)},
                        {"height", std::to_string(config.resolution.height)}};

  std::string clause_key(to_string(config.mode));
  if (config.frame_count == 1) clause_key += "_single";
  values["mode_clause"] = render_placeholders(t.mode_clauses.at(clause_key), values);
  values["questions"] = render_questions(schema, t);
  values["answer_format"] =
      render_placeholders(t.answer_format, {{"key_format", key_format_hint(schema.size())}});

  PromptBundle b;
  b.template_id = t.template_id;
  b.mode = config.mode;
  b.system_text = t.system;
  b.user_text = render_placeholders(t.user, values);

  if (config.mode == PresentationMode::Collage) {
    b.image_roles.push_back({"collage", 0, 0,
                             config.grid.to_string() + " collage of " + std::to_string(config.frame_count) +
                                 " frames, row-major"});
  } else {
    for (int i = 0; i < config.frame_count; ++i) {
      const int time_ms = i * config.interval_ms;
      b.image_roles.push_back({"frame", i, time_ms,
                               "frame " + std::to_string(i + 1) + " of " + std::to_string(config.frame_count) +
                                   " at " + std::to_string(time_ms) + " ms"});
      if (config.mode == PresentationMode::Batch && i + 1 < config.frame_count) {
        auto turn_values = values;
        turn_values["index"] = std::to_string(i + 1);
        turn_values["time_ms"] = std::to_string(time_ms);
        b.batch_turns.push_back(render_placeholders(t.batch_turn, turn_values));
      }
    }
  }
  return b;
}

} // namespace sceneval

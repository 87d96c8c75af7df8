#pragma once

// Answer-key extraction from free-form model responses. Only the trailing
// numbered key counts; the surrounding explanation is kept verbatim.

#include <cctype>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "sceneval/core/error.hpp"
#include "sceneval/core/schema.hpp"

namespace sceneval {

enum class ParseStatus { Parsed, Refusal, Unparseable };

inline std::string_view to_string(ParseStatus s) {
  switch (s) {
  case ParseStatus::Parsed: return "parsed";
  case ParseStatus::Refusal: return "refusal";
  case ParseStatus::Unparseable: return "unparseable";
  }
  return "unparseable";
}

inline ParseStatus parse_status(std::string_view s) {
  if (s == "parsed") return ParseStatus::Parsed;
  if (s == "refusal") return ParseStatus::Refusal;
  if (s == "unparseable") return ParseStatus::Unparseable;
  throw ConfigError("unknown parse status '" + std::string(s) + "'");
}

/// key is set iff status == Parsed.
struct ParsedResponse {
  ParseStatus status = ParseStatus::Unparseable;
  std::optional<AnswerKey> key;
  std::string raw_text;
  std::string reason;

  bool parsed() const { return status == ParseStatus::Parsed; }

  friend bool operator==(const ParsedResponse &, const ParsedResponse &) = default;
};

inline void to_json(nlohmann::json &j, const ParsedResponse &p) {
  j = {{"status", std::string(to_string(p.status))}, {"raw_text", p.raw_text}, {"reason", p.reason}};
  j["key"] = p.key ? nlohmann::json(p.key->str()) : nlohmann::json(nullptr);
}

inline void from_json(const nlohmann::json &j, ParsedResponse &p) {
  p.status = parse_status(j.at("status").get<std::string>());
  p.raw_text = j.value("raw_text", std::string());
  p.reason = j.value("reason", std::string());
  p.key.reset();
  if (auto it = j.find("key"); it != j.end() && it->is_string()) p.key = AnswerKey(it->get<std::string>());
}

/// "1) A 2) A 3) B ...": the form the parser reads back losslessly.
inline std::string render_key(const AnswerKey &key) {
  std::string out;
  for (std::size_t i = 0; i < key.size(); ++i) {
    if (i) out += ' ';
    out += std::to_string(i + 1) + ") " + key[i];
  }
  return out;
}

namespace detail {

struct KeyItem {
  int number;
  char letter;
};

inline std::vector<KeyItem> scan_key_items(const std::string &text) {
  // "3) B", "3. b", "3: [B]", "**3)** B"; the letter must stand alone.
  static const std::regex item(R"((\d+)\s*\**\s*[).:]\s*\**\s*\[?([A-Za-z])\]?(?![A-Za-z]))");
  std::vector<KeyItem> out;
  for (auto it = std::sregex_iterator(text.begin(), text.end(), item); it != std::sregex_iterator(); ++it) {
    const auto &m = *it;
    const auto start = static_cast<std::size_t>(m.position(0));
    if (start > 0 && std::isalnum(static_cast<unsigned char>(text[start - 1]))) continue;
    const std::string digits = m.str(1);
    if (digits.size() > 3) continue;
    out.push_back({std::stoi(digits), static_cast<char>(std::toupper(static_cast<unsigned char>(m.str(2)[0])))});
  }
  return out;
}

inline bool states_inability(const std::string &text) {
  static const std::regex phrases(
      R"(\b(?:i(?:'|’)?m sorry|i apologi[sz]e|i(?: am|'m|’m)? (?:unable|not able) to|i (?:can(?:'|’)?t|cannot|won(?:'|’)?t|will not) (?:help|assist|analy[sz]e|provide|identify|determine|classify|comply|answer|process|view|see|interpret)|unable to (?:analy[sz]e|determine|process|view|see|interpret|classify)|not able to (?:analy[sz]e|determine|view|see))\b)",
      std::regex::ECMAScript | std::regex::icase);
  return std::regex_search(text, phrases);
}

} // namespace detail

/// Status partition: Parsed when the last complete numbered key has valid
/// letters and is not all "does not apply"; Refusal for an all-default key or
/// an inability statement with no key; Unparseable otherwise.
inline ParsedResponse parse_response(const std::string &text, const AnnotationSchema &schema) {
  ParsedResponse out;
  out.raw_text = text;
  const std::size_t n = schema.size();
  const auto items = detail::scan_key_items(text);

  // Start index of the last run numbered 1..n in consecutive items.
  std::optional<std::size_t> last_run;
  for (std::size_t s = 0; s + n <= items.size(); ++s) {
    bool run = true;
    for (std::size_t k = 0; k < n && run; ++k) run = items[s + k].number == static_cast<int>(k + 1);
    if (run) last_run = s;
  }

  if (!last_run) {
    const bool refused = detail::states_inability(text);
    out.status = refused ? ParseStatus::Refusal : ParseStatus::Unparseable;
    out.reason = text.empty() ? "empty response" : refused ? "inability statement" : "no complete answer key";
    return out;
  }

  std::string letters;
  for (std::size_t k = 0; k < n; ++k) letters.push_back(items[*last_run + k].letter);
  if (auto verdict = validate_key(letters, schema); !verdict.valid()) {
    out.status = ParseStatus::Unparseable;
    out.reason = verdict.message;
    return out;
  }
  if (letters == schema.default_letters()) {
    out.status = ParseStatus::Refusal;
    out.reason = "every category answered 'does not apply'";
    return out;
  }
  out.status = ParseStatus::Parsed;
  out.key = AnswerKey(std::move(letters));
  return out;
}

} // namespace sceneval

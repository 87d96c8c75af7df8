#pragma once

// Conversations and their provider wire formats. Images travel inline as
// base64 data; each provider adapter maps the same conversation to its own
// JSON body and reads the reply text back out.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sceneval/core/config.hpp"
#include "sceneval/frames/codec.hpp"
#include "sceneval/gateway/endpoint.hpp"
#include "sceneval/gateway/transport.hpp"
#include "sceneval/prompt/builder.hpp"

namespace sceneval {

struct ImageAttachment {
  std::string mime = "image/png";
  std::vector<std::uint8_t> bytes;
};

struct MessagePart {
  enum class Kind { Text, Image } kind = Kind::Text;
  std::string text;
  std::size_t image = 0; // index into the attachment list
};

struct Message {
  std::string role; // "user" or "assistant"
  std::vector<MessagePart> parts;
};

struct Conversation {
  std::string system;
  std::vector<Message> messages;
};

inline Message user_message(std::vector<std::size_t> images, std::string text) {
  Message m{"user", {}};
  for (auto i : images) m.parts.push_back({MessagePart::Kind::Image, {}, i});
  if (!text.empty()) m.parts.push_back({MessagePart::Kind::Text, std::move(text), 0});
  return m;
}

inline std::size_t expected_image_count(const PromptBundle &bundle) {
  return bundle.mode == PresentationMode::Collage ? 1 : bundle.image_roles.size();
}

/// Single-request conversation for Collage (one image) and Separate (all
/// frames in one message, chronological).
inline Conversation single_turn_conversation(const PromptBundle &bundle, std::size_t images) {
  std::vector<std::size_t> idx(images);
  for (std::size_t i = 0; i < images; ++i) idx[i] = i;
  return {bundle.system_text, {user_message(std::move(idx), bundle.user_text)}};
}

/// Text sent with batch turn k (0-based); the last turn carries the questions.
inline const std::string &batch_turn_text(const PromptBundle &bundle, std::size_t k) {
  return k < bundle.batch_turns.size() ? bundle.batch_turns[k] : bundle.user_text;
}

namespace detail {

inline std::string data_url(const ImageAttachment &img) {
  return "data:" + img.mime + ";base64," + base64_encode(img.bytes);
}

} // namespace detail

inline nlohmann::json openai_body(const ModelEndpoint &e, const Conversation &c,
                                  const std::vector<ImageAttachment> &images) {
  nlohmann::json messages = nlohmann::json::array();
  if (!c.system.empty()) messages.push_back({{"role", "system"}, {"content", c.system}});
  for (const auto &m : c.messages) {
    nlohmann::json content = nlohmann::json::array();
    for (const auto &p : m.parts) {
      if (p.kind == MessagePart::Kind::Text)
        content.push_back({{"type", "text"}, {"text", p.text}});
      else
        content.push_back({{"type", "image_url"}, {"image_url", {{"url", detail::data_url(images.at(p.image))}}}});
    }
    if (m.role == "assistant" && m.parts.size() == 1 && m.parts[0].kind == MessagePart::Kind::Text)
      messages.push_back({{"role", m.role}, {"content", m.parts[0].text}});
    else
      messages.push_back({{"role", m.role}, {"content", content}});
  }
  return {{"model", e.wire_model()},
          {"messages", messages},
          {"max_tokens", e.max_tokens},
          {"temperature", e.temperature}};
}

inline nlohmann::json anthropic_body(const ModelEndpoint &e, const Conversation &c,
                                     const std::vector<ImageAttachment> &images) {
  nlohmann::json messages = nlohmann::json::array();
  for (const auto &m : c.messages) {
    nlohmann::json content = nlohmann::json::array();
    for (const auto &p : m.parts) {
      if (p.kind == MessagePart::Kind::Text) {
        content.push_back({{"type", "text"}, {"text", p.text}});
      } else {
        const auto &img = images.at(p.image);
        content.push_back({{"type", "image"},
                           {"source", {{"type", "base64"}, {"media_type", img.mime},
                                       {"data", base64_encode(img.bytes)}}}});
      }
    }
    messages.push_back({{"role", m.role}, {"content", content}});
  }
  nlohmann::json body = {{"model", e.wire_model()},
                         {"messages", messages},
                         {"max_tokens", e.max_tokens},
                         {"temperature", e.temperature}};
  if (!c.system.empty()) body["system"] = c.system;
  return body;
}

/// Complete request, credential header included. The request object is
/// transient and never logged.
inline HttpRequest make_request(const ModelEndpoint &e, const Conversation &c,
                                const std::vector<ImageAttachment> &images, const std::string &credential) {
  HttpRequest r;
  r.base_url = e.base_url;
  r.path = e.request_path();
  r.timeout_s = e.timeout_s;
  r.headers["Content-Type"] = "application/json";
  if (e.provider == ProviderKind::Anthropic) {
    r.headers["x-api-key"] = credential;
    r.headers["anthropic-version"] = "2023-06-01";
    r.body = anthropic_body(e, c, images).dump();
  } else {
    if (!credential.empty()) r.headers["Authorization"] = "Bearer " + credential;
    r.body = openai_body(e, c, images).dump();
  }
  return r;
}

/// Reply text from a provider response body; nullopt when the body carries no
/// text at all. A provider-side content refusal is returned as text.
inline std::optional<std::string> reply_text(ProviderKind provider, const std::string &body) {
  auto j = nlohmann::json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return std::nullopt;
  std::string out;
  bool found = false;
  auto append_parts = [&](const nlohmann::json &content) {
    if (content.is_string()) {
      out += content.get<std::string>();
      found = true;
    } else if (content.is_array()) {
      for (const auto &part : content)
        if (part.is_object() && part.value("type", "") == "text" && part.contains("text")) {
          out += part["text"].get<std::string>();
          found = true;
        }
    }
  };
  if (provider == ProviderKind::Anthropic) {
    if (auto it = j.find("content"); it != j.end()) append_parts(*it);
  } else if (auto ch = j.find("choices"); ch != j.end() && ch->is_array() && !ch->empty()) {
    const auto &msg = (*ch)[0].value("message", nlohmann::json::object());
    if (auto c = msg.find("content"); c != msg.end()) append_parts(*c);
    if (auto r = msg.find("refusal"); r != msg.end() && r->is_string() && out.empty()) {
      out = r->get<std::string>();
      found = true;
    }
  }
  if (!found) return std::nullopt;
  return out;
}

} // namespace sceneval

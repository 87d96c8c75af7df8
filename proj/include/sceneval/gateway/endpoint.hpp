#pragma once

// Model endpoints and the JSON registry that lists them. Secrets are never
// stored here: an endpoint names the environment variable holding its key.

#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "sceneval/core/error.hpp"

namespace sceneval {

enum class ProviderKind { Mock, OpenAICompatible, Anthropic };

inline std::string_view to_string(ProviderKind p) {
  switch (p) {
  case ProviderKind::Mock: return "mock";
  case ProviderKind::OpenAICompatible: return "openai";
  case ProviderKind::Anthropic: return "anthropic";
  }
  return "mock";
}

inline ProviderKind parse_provider_kind(std::string_view s) {
  if (s == "mock") return ProviderKind::Mock;
  if (s == "openai" || s == "openai-compatible") return ProviderKind::OpenAICompatible;
  if (s == "anthropic") return ProviderKind::Anthropic;
  throw ConfigError("unknown provider '" + std::string(s) + "'");
}

/// Behaviour of the offline mock model. Each category answer equals the
/// ground truth with its probability; otherwise it is drawn uniformly from
/// the remaining options.
struct MockProfile {
  std::uint64_t seed = 0;
  double default_accuracy = 0.5;
  std::map<std::string, double> category_accuracy; // by category name
  double refusal_rate = 0.0;
  double unparseable_rate = 0.0;
  double failure_rate = 0.0;     // simulated transport failures
  double latency_s = 1.0;        // reported mean latency
  double latency_jitter_s = 0.0; // uniform half-width around the mean

  double accuracy_for(const std::string &category) const {
    auto it = category_accuracy.find(category);
    return it == category_accuracy.end() ? default_accuracy : it->second;
  }

  friend bool operator==(const MockProfile &, const MockProfile &) = default;
};

inline void to_json(nlohmann::json &j, const MockProfile &p) {
  j = {{"seed", p.seed},
       {"default_accuracy", p.default_accuracy},
       {"category_accuracy", p.category_accuracy},
       {"refusal_rate", p.refusal_rate},
       {"unparseable_rate", p.unparseable_rate},
       {"failure_rate", p.failure_rate},
       {"latency_s", p.latency_s},
       {"latency_jitter_s", p.latency_jitter_s}};
}

inline void from_json(const nlohmann::json &j, MockProfile &p) {
  p.seed = j.value("seed", std::uint64_t{0});
  p.default_accuracy = j.value("default_accuracy", 0.5);
  p.category_accuracy = j.value("category_accuracy", std::map<std::string, double>{});
  p.refusal_rate = j.value("refusal_rate", 0.0);
  p.unparseable_rate = j.value("unparseable_rate", 0.0);
  p.failure_rate = j.value("failure_rate", 0.0);
  p.latency_s = j.value("latency_s", 1.0);
  p.latency_jitter_s = j.value("latency_jitter_s", 0.0);
  auto prob = [](double v, const std::string &what) {
    if (!(v >= 0.0 && v <= 1.0)) throw ConfigError("mock profile: " + what + " must be in [0,1]");
  };
  prob(p.default_accuracy, "default_accuracy");
  for (const auto &[k, v] : p.category_accuracy) prob(v, "category_accuracy." + k);
  prob(p.refusal_rate, "refusal_rate");
  prob(p.unparseable_rate, "unparseable_rate");
  prob(p.failure_rate, "failure_rate");
  if (p.refusal_rate + p.unparseable_rate + p.failure_rate > 1.0)
    throw ConfigError("mock profile: failure rates exceed 1");
  if (p.latency_s < 0.0 || p.latency_jitter_s < 0.0 || p.latency_jitter_s > p.latency_s)
    throw ConfigError("mock profile: latency must be non-negative");
}

struct ModelEndpoint {
  std::string model_id;
  ProviderKind provider = ProviderKind::Mock;
  std::string family;      // grouping for consistency statistics
  std::string base_url;    // scheme://host[:port]
  std::string path;        // request path; provider default when empty
  std::string api_model;   // model name sent on the wire; model_id when empty
  std::string credential_env;
  double timeout_s = 60.0;
  int max_retries = 2;
  int retry_backoff_ms = 500; // doubled per retry
  int min_spacing_ms = 0;
  int parallelism = 1;
  int max_tokens = 1024;
  double temperature = 0.0;
  MockProfile mock;

  std::string request_path() const {
    if (!path.empty()) return path;
    return provider == ProviderKind::Anthropic ? "/v1/messages" : "/v1/chat/completions";
  }
  std::string wire_model() const { return api_model.empty() ? model_id : api_model; }

  /// Key from the named environment variable; nullopt when unset or empty.
  std::optional<std::string> credential() const {
    if (credential_env.empty()) return std::nullopt;
    const char *v = std::getenv(credential_env.c_str());
    if (!v || !*v) return std::nullopt;
    return std::string(v);
  }

  void validate() const {
    if (model_id.empty()) throw ConfigError("endpoint: model_id must be non-empty");
    if (provider != ProviderKind::Mock && base_url.empty())
      throw ConfigError("endpoint " + model_id + ": base_url is required");
    if (timeout_s <= 0.0) throw ConfigError("endpoint " + model_id + ": timeout_s must be positive");
    if (max_retries < 0) throw ConfigError("endpoint " + model_id + ": max_retries must be >= 0");
    if (min_spacing_ms < 0 || retry_backoff_ms < 0) throw ConfigError("endpoint " + model_id + ": negative delay");
    if (parallelism < 1) throw ConfigError("endpoint " + model_id + ": parallelism must be >= 1");
  }

  friend bool operator==(const ModelEndpoint &, const ModelEndpoint &) = default;
};

inline void to_json(nlohmann::json &j, const ModelEndpoint &e) {
  j = {{"model_id", e.model_id},
       {"provider", std::string(to_string(e.provider))},
       {"family", e.family},
       {"base_url", e.base_url},
       {"path", e.path},
       {"api_model", e.api_model},
       {"credential_env", e.credential_env},
       {"timeout_s", e.timeout_s},
       {"max_retries", e.max_retries},
       {"retry_backoff_ms", e.retry_backoff_ms},
       {"min_spacing_ms", e.min_spacing_ms},
       {"parallelism", e.parallelism},
       {"max_tokens", e.max_tokens},
       {"temperature", e.temperature}};
  if (e.provider == ProviderKind::Mock) j["mock"] = e.mock;
}

inline void from_json(const nlohmann::json &j, ModelEndpoint &e) {
  e.model_id = j.at("model_id").get<std::string>();
  e.provider = parse_provider_kind(j.value("provider", std::string("mock")));
  e.family = j.value("family", std::string());
  e.base_url = j.value("base_url", std::string());
  e.path = j.value("path", std::string());
  e.api_model = j.value("api_model", std::string());
  e.credential_env = j.value("credential_env", std::string());
  e.timeout_s = j.value("timeout_s", 60.0);
  e.max_retries = j.value("max_retries", 2);
  e.retry_backoff_ms = j.value("retry_backoff_ms", 500);
  e.min_spacing_ms = j.value("min_spacing_ms", 0);
  e.parallelism = j.value("parallelism", 1);
  e.max_tokens = j.value("max_tokens", 1024);
  e.temperature = j.value("temperature", 0.0);
  if (auto it = j.find("mock"); it != j.end()) e.mock = it->get<MockProfile>();
  e.validate();
}

/// Mock endpoint with the given profile.
inline ModelEndpoint mock_model(const MockProfile &profile, std::string model_id = "mock",
                                std::string family = "mock") {
  ModelEndpoint e;
  e.model_id = std::move(model_id);
  e.family = std::move(family);
  e.provider = ProviderKind::Mock;
  e.max_retries = 0;
  e.mock = profile;
  return e;
}

struct EndpointRegistry {
  std::vector<ModelEndpoint> endpoints;

  const ModelEndpoint &get(const std::string &model_id) const {
    for (const auto &e : endpoints)
      if (e.model_id == model_id) return e;
    throw ConfigError("no endpoint named '" + model_id + "' in registry");
  }

  /// model_id -> family, for consistency statistics.
  std::map<std::string, std::string> families() const {
    std::map<std::string, std::string> out;
    for (const auto &e : endpoints)
      if (!e.family.empty()) out[e.model_id] = e.family;
    return out;
  }
};

inline EndpointRegistry registry_from_json(const nlohmann::json &j) {
  EndpointRegistry r;
  try {
    for (const auto &e : j.at("endpoints")) r.endpoints.push_back(e.get<ModelEndpoint>());
  } catch (const nlohmann::json::exception &e) {
    throw ConfigError(std::string("endpoint registry: ") + e.what());
  }
  for (std::size_t a = 0; a < r.endpoints.size(); ++a)
    for (std::size_t b = a + 1; b < r.endpoints.size(); ++b)
      if (r.endpoints[a].model_id == r.endpoints[b].model_id)
        throw ConfigError("endpoint registry: duplicate model_id '" + r.endpoints[a].model_id + "'");
  return r;
}

inline nlohmann::json registry_to_json(const EndpointRegistry &r) {
  return {{"endpoints", r.endpoints}};
}

inline EndpointRegistry load_registry(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open endpoint registry " + path);
  try {
    return registry_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error &e) {
    throw ConfigError("endpoint registry " + path + ": " + e.what());
  }
}

} // namespace sceneval

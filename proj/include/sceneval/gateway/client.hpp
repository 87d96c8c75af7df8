#pragma once

// Sends one prompt bundle to one endpoint under the presentation-mode
// contract, with per-request retries, per-endpoint request spacing and a
// per-endpoint bound on scenarios in flight.

#include <chrono>
#include <condition_variable>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "sceneval/core/schema.hpp"
#include "sceneval/gateway/endpoint.hpp"
#include "sceneval/gateway/mock.hpp"
#include "sceneval/gateway/providers.hpp"
#include "sceneval/gateway/transport.hpp"
#include "sceneval/prompt/builder.hpp"

namespace sceneval {

struct QueryOutcome {
  std::string raw_text;
  double latency_s = 0.0;
  int attempts = 0;
  int requests = 0; // completed HTTP exchanges (one per batch turn)
  TransportStatus transport = TransportStatus::Ok;
  int http_status = 0;
  std::string error;

  bool ok() const { return transport == TransportStatus::Ok; }

  friend bool operator==(const QueryOutcome &, const QueryOutcome &) = default;
};

inline void to_json(nlohmann::json &j, const QueryOutcome &q) {
  j = {{"latency_s", q.latency_s},
       {"attempts", q.attempts},
       {"requests", q.requests},
       {"transport", std::string(to_string(q.transport))},
       {"http_status", q.http_status},
       {"error", q.error}};
}

inline TransportStatus parse_transport_status(std::string_view s) {
  for (auto t : {TransportStatus::Ok, TransportStatus::Timeout, TransportStatus::ConnectionError,
                 TransportStatus::AuthFailure, TransportStatus::HttpError, TransportStatus::MockFailure,
                 TransportStatus::AssetError})
    if (to_string(t) == s) return t;
  throw ConfigError("unknown transport status '" + std::string(s) + "'");
}

inline void from_json(const nlohmann::json &j, QueryOutcome &q) {
  q.latency_s = j.value("latency_s", 0.0);
  q.attempts = j.value("attempts", 0);
  q.requests = j.value("requests", 0);
  q.transport = parse_transport_status(j.value("transport", std::string("ok")));
  q.http_status = j.value("http_status", 0);
  q.error = j.value("error", std::string());
}

/// Scenario facts the client may need: the mock reads the ground truth,
/// real providers ignore it.
struct QueryContext {
  std::string scenario_id;
  std::string config_id;
  const AnnotationSchema *schema = nullptr;
  std::optional<AnswerKey> truth;
};

/// Successive acquire() calls return, and release their callers at, clock
/// readings at least `spacing` apart.
class RateLimiter {
public:
  explicit RateLimiter(std::chrono::milliseconds spacing) : spacing_(spacing) {}

  std::chrono::steady_clock::time_point acquire() {
    std::lock_guard lock(mu_);
    std::this_thread::sleep_until(next_);
    const auto now = std::chrono::steady_clock::now();
    next_ = now + spacing_;
    return now;
  }

private:
  std::mutex mu_;
  std::chrono::milliseconds spacing_;
  std::chrono::steady_clock::time_point next_{};
};

class Slots {
public:
  explicit Slots(int n) : free_(n) {}
  void acquire() {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return free_ > 0; });
    --free_;
  }
  void release() {
    {
      std::lock_guard lock(mu_);
      ++free_;
    }
    cv_.notify_one();
  }

private:
  std::mutex mu_;
  std::condition_variable cv_;
  int free_;
};

class VlmClient {
public:
  /// transport may be null when only mock endpoints are used.
  explicit VlmClient(std::shared_ptr<Transport> transport = nullptr) : transport_(std::move(transport)) {}

  QueryOutcome send(const ModelEndpoint &endpoint, const PromptBundle &bundle,
                    const std::vector<ImageAttachment> &images, const QueryContext &ctx) {
    if (endpoint.provider != ProviderKind::Mock && images.size() != expected_image_count(bundle))
      throw std::invalid_argument(std::string(to_string(bundle.mode)) + " mode expects " +
                                  std::to_string(expected_image_count(bundle)) + " images, got " +
                                  std::to_string(images.size()));
    auto &state = state_for(endpoint);
    state.slots.acquire();
    struct Release {
      Slots &s;
      ~Release() { s.release(); }
    } release{state.slots};

    if (endpoint.provider == ProviderKind::Mock) return send_mock(endpoint, bundle, ctx);
    if (!transport_) throw std::logic_error("no transport configured for endpoint " + endpoint.model_id);

    QueryOutcome out;
    const auto credential = endpoint.credential();
    if (!credential && !endpoint.credential_env.empty()) {
      out.transport = TransportStatus::AuthFailure;
      out.error = "environment variable " + endpoint.credential_env + " is not set";
      return out;
    }
    const std::string key = credential.value_or("");

    if (bundle.mode != PresentationMode::Batch) {
      exchange(endpoint, state, single_turn_conversation(bundle, images.size()), images, key, out);
      return out;
    }
    // Batch: one image per turn, the model's interim replies kept in context.
    Conversation conv{bundle.system_text, {}};
    std::string text;
    for (std::size_t k = 0; k < images.size(); ++k) {
      conv.messages.push_back(user_message({k}, batch_turn_text(bundle, k)));
      text = exchange(endpoint, state, conv, images, key, out);
      if (!out.ok()) return out;
      if (k + 1 < images.size()) conv.messages.push_back({"assistant", {{MessagePart::Kind::Text, text, 0}}});
    }
    return out;
  }

private:
  struct EndpointState {
    explicit EndpointState(const ModelEndpoint &e)
        : limiter(std::chrono::milliseconds(e.min_spacing_ms)), slots(e.parallelism) {}
    RateLimiter limiter;
    Slots slots;
  };

  EndpointState &state_for(const ModelEndpoint &e) {
    std::lock_guard lock(mu_);
    auto &slot = states_[e.model_id];
    if (!slot) slot = std::make_unique<EndpointState>(e);
    return *slot;
  }

  static QueryOutcome send_mock(const ModelEndpoint &endpoint, const PromptBundle &bundle, const QueryContext &ctx) {
    if (!ctx.schema || !ctx.truth) throw std::invalid_argument("mock endpoint requires schema and ground truth");
    auto reply = mock_reply(endpoint, *ctx.schema, *ctx.truth, ctx.scenario_id, ctx.config_id);
    QueryOutcome out;
    out.attempts = 1;
    const int turns = bundle.mode == PresentationMode::Batch ? static_cast<int>(bundle.image_roles.size()) : 1;
    if (reply.failed) {
      out.transport = TransportStatus::MockFailure;
      out.error = "simulated transport failure";
      return out;
    }
    out.requests = turns;
    out.latency_s = reply.latency_s * turns;
    out.http_status = 200;
    out.raw_text = std::move(reply.text);
    return out;
  }

  /// One logical request with retries. Adds the answered attempt's wall time
  /// to out.latency_s and returns the reply text; on failure sets out.transport.
  std::string exchange(const ModelEndpoint &endpoint, EndpointState &state, const Conversation &conv,
                       const std::vector<ImageAttachment> &images, const std::string &key, QueryOutcome &out) {
    const auto request = make_request(endpoint, conv, images, key);
    for (int attempt = 0; attempt <= endpoint.max_retries; ++attempt) {
      if (attempt > 0 && endpoint.retry_backoff_ms > 0)
        std::this_thread::sleep_for(std::chrono::milliseconds(endpoint.retry_backoff_ms) * (1 << (attempt - 1)));
      const auto start = state.limiter.acquire();
      auto response = transport_->post(request);
      const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      ++out.attempts;
      out.http_status = response.status;

      bool retryable = false;
      if (response.transport != TransportStatus::Ok) {
        out.transport = response.transport;
        out.error = response.error;
        retryable = true;
      } else if (response.status == 401 || response.status == 403) {
        out.transport = TransportStatus::AuthFailure;
        out.error = "HTTP " + std::to_string(response.status);
        break;
      } else if (response.status < 200 || response.status >= 300) {
        out.transport = TransportStatus::HttpError;
        out.error = "HTTP " + std::to_string(response.status);
        retryable = response.status == 429 || response.status >= 500;
      } else if (auto text = reply_text(endpoint.provider, response.body); text && !text->empty()) {
        out.transport = TransportStatus::Ok;
        out.error.clear();
        out.latency_s += elapsed;
        ++out.requests;
        out.raw_text = *text;
        return *text;
      } else {
        out.transport = TransportStatus::HttpError;
        out.error = "response body carries no reply text";
      }
      if (!retryable) break;
    }
    out.raw_text.clear();
    return {};
  }

  std::shared_ptr<Transport> transport_;
  std::mutex mu_;
  std::map<std::string, std::unique_ptr<EndpointState>> states_;
};

} // namespace sceneval

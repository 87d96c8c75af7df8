#pragma once

// Offline model: answers from the out-of-band ground truth with planted
// per-category accuracies. Output is a pure function of
// (profile seed, model_id, scenario_id, config_id).

#include <string>

#include "sceneval/core/random.hpp"
#include "sceneval/core/schema.hpp"
#include "sceneval/gateway/endpoint.hpp"
#include "sceneval/prompt/parser.hpp"

namespace sceneval {

struct MockReply {
  bool failed = false;
  std::string text;
  double latency_s = 0.0;
};

inline MockReply mock_reply(const ModelEndpoint &endpoint, const AnnotationSchema &schema, const AnswerKey &truth,
                            const std::string &scenario_id, const std::string &config_id) {
  if (!validate_key(truth, schema).valid())
    throw std::invalid_argument("mock model: ground truth '" + truth.str() + "' does not fit the schema");
  const auto &p = endpoint.mock;
  auto rng = SeededRng::derive(p.seed, endpoint.model_id, scenario_id, config_id);
  MockReply out;
  out.latency_s = p.latency_s + p.latency_jitter_s * (2.0 * rng.uniform() - 1.0);

  const double roll = rng.uniform();
  if (roll < p.failure_rate) {
    out.failed = true;
    return out;
  }
  if (roll < p.failure_rate + p.refusal_rate) {
    out.text = "I'm sorry, but I can't help with analyzing this driving scene.";
    return out;
  }
  if (roll < p.failure_rate + p.refusal_rate + p.unparseable_rate) {
    out.text = "The sequence is difficult to interpret; the vehicle's situation is unclear from these images.";
    return out;
  }

  std::string letters;
  for (std::size_t c = 0; c < schema.size(); ++c) {
    const auto &cat = schema.category(c);
    const char t = truth[c];
    const std::size_t k = cat.options.size();
    if (k == 1 || rng.bernoulli(p.accuracy_for(cat.name))) {
      letters.push_back(t);
    } else {
      // Uniform over the k-1 options other than the truth.
      auto pick = static_cast<char>('A' + rng.below(k - 1));
      if (pick >= t) ++pick;
      letters.push_back(pick);
    }
  }
  out.text = "Looking at the sequence from the first frame to the last, I assessed each category in turn.\n\n" +
             render_key(AnswerKey(letters));
  return out;
}

} // namespace sceneval

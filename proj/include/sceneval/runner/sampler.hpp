#pragma once

// Deterministic scenario sequence for one phase. Every configuration of the
// phase, and every model, sees the same sequence, so comparisons are paired.

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "sceneval/annotate/extractor.hpp"
#include "sceneval/core/error.hpp"
#include "sceneval/core/random.hpp"

namespace sceneval {

class ScenarioSampler {
public:
  /// The first |pool| positions visit every scenario once, round-robin across
  /// ground-truth keys; later positions draw uniformly with replacement.
  ScenarioSampler(const std::vector<GroundTruth> &pool, std::uint64_t seed, int phase)
      : seed_(seed), phase_(phase) {
    if (pool.empty()) throw PreconditionError("no eligible scenarios to sample");
    std::map<std::string, std::vector<std::string>> by_key;
    for (const auto &g : pool) by_key[g.key.str()].push_back(g.scenario_id);
    auto rng = SeededRng::derive(seed, "sampler", std::to_string(phase));
    std::vector<std::vector<std::string>> strata;
    for (auto &[key, ids] : by_key) {
      std::sort(ids.begin(), ids.end());
      rng.shuffle(ids);
      strata.push_back(std::move(ids));
    }
    rng.shuffle(strata);
    for (std::size_t round = 0; order_.size() < pool.size(); ++round)
      for (const auto &s : strata)
        if (round < s.size()) order_.push_back(s[round]);
    all_ = order_;
    std::sort(all_.begin(), all_.end());
  }

  const std::string &at(std::size_t position) const {
    if (position < order_.size()) return order_[position];
    auto rng = SeededRng::derive(seed_, "sampler-tail", std::to_string(phase_), std::to_string(position));
    return all_[rng.below(all_.size())];
  }

  std::size_t pool_size() const { return order_.size(); }

private:
  std::uint64_t seed_;
  int phase_;
  std::vector<std::string> order_;
  std::vector<std::string> all_;
};

} // namespace sceneval

#pragma once

#include <cmath>
#include <numeric>
#include <vector>

#include "sceneval/core/error.hpp"

namespace sceneval {

/// Per-category weights of the composite score, normalized to sum to 1.
class ScoreWeights {
public:
  explicit ScoreWeights(std::vector<double> raw) : alpha_(std::move(raw)) {
    if (alpha_.empty()) throw ConfigError("weights must not be empty");
    double sum = 0.0;
    for (double w : alpha_) {
      if (!(w >= 0.0) || !std::isfinite(w)) throw ConfigError("weights must be finite and non-negative");
      sum += w;
    }
    if (sum <= 0.0) throw ConfigError("weights must not all be zero");
    for (double &w : alpha_) w /= sum;
  }

  static ScoreWeights equal(std::size_t n) { return ScoreWeights(std::vector<double>(n, 1.0)); }

  const std::vector<double> &alpha() const { return alpha_; }
  double operator[](std::size_t i) const { return alpha_[i]; }
  std::size_t size() const { return alpha_.size(); }

private:
  std::vector<double> alpha_;
};

} // namespace sceneval

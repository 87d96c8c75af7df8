#pragma once

// One-way ANOVA of per-record scores grouped by a configuration dimension.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "sceneval/core/config.hpp"
#include "sceneval/metrics/fdist.hpp"
#include "sceneval/metrics/score.hpp"

namespace sceneval {

struct ScoreGroup {
  std::string value;
  std::vector<double> scores;
};

struct GroupStats {
  std::string value;
  std::size_t n = 0;
  double mean = 0.0;
  double sigma = 0.0; // population
};

struct SensitivityReport {
  std::string dimension;
  std::vector<GroupStats> groups;
  std::size_t n = 0;
  double ss_between = 0.0;
  double ss_within = 0.0;
  double df_between = 0.0;
  double df_within = 0.0;
  double f = 0.0;
  double p = 1.0;
  double eta_squared = 0.0;
};

/// Requires at least two groups of at least two scores. With no within-group
/// variance F is infinite (p = 0) unless the group means also agree, in which
/// case there is nothing to explain: F = 0, p = 1, eta^2 = 0.
inline SensitivityReport one_way_anova(const std::vector<ScoreGroup> &groups, std::string dimension = {}) {
  if (groups.size() < 2) throw PreconditionError("ANOVA needs at least two groups");
  for (const auto &g : groups)
    if (g.scores.size() < 2)
      throw PreconditionError("group '" + g.value + "' has " + std::to_string(g.scores.size()) +
                              " records; ANOVA needs at least two per group");
  SensitivityReport s;
  s.dimension = std::move(dimension);
  double total = 0.0;
  for (const auto &g : groups) {
    for (double x : g.scores) total += x;
    s.n += g.scores.size();
  }
  const double grand = total / static_cast<double>(s.n);
  for (const auto &g : groups) {
    GroupStats st;
    st.value = g.value;
    st.n = g.scores.size();
    double sum = 0.0;
    for (double x : g.scores) sum += x;
    st.mean = sum / static_cast<double>(st.n);
    double ss = 0.0;
    for (double x : g.scores) ss += (x - st.mean) * (x - st.mean);
    st.sigma = std::sqrt(ss / static_cast<double>(st.n));
    s.ss_within += ss;
    s.ss_between += static_cast<double>(st.n) * (st.mean - grand) * (st.mean - grand);
    s.groups.push_back(st);
  }
  s.df_between = static_cast<double>(groups.size() - 1);
  s.df_within = static_cast<double>(s.n - groups.size());
  const double ss_total = s.ss_between + s.ss_within;
  s.eta_squared = ss_total > 0.0 ? s.ss_between / ss_total : 0.0;
  if (s.ss_within > 0.0) {
    s.f = (s.ss_between / s.df_between) / (s.ss_within / s.df_within);
    s.p = f_survival(s.f, s.df_between, s.df_within);
  } else if (s.ss_between > 0.0) {
    s.f = std::numeric_limits<double>::infinity();
    s.p = 0.0;
  }
  return s;
}

namespace detail {

/// Natural order of dimension values: numeric where the value is numeric.
inline std::tuple<int, int, int> dimension_rank(const SamplingConfig &c, Dimension d) {
  switch (d) {
  case Dimension::Resolution: return {c.resolution.level, 0, 0};
  case Dimension::Frames: return {c.frame_count, 0, 0};
  case Dimension::Interval: return {c.interval_ms, 0, 0};
  case Dimension::Grid: return {c.grid.rows, c.grid.cols, 0};
  case Dimension::Mode: return {static_cast<int>(c.mode), 0, 0};
  }
  return {0, 0, 0};
}

} // namespace detail

/// Per-record scores of answered records grouped by dimension value, in the
/// dimension's natural order.
inline std::vector<ScoreGroup> group_scores(const std::vector<EvaluationRecord> &records, Dimension d) {
  std::map<std::tuple<int, int, int>, ScoreGroup> by_rank;
  for (const auto &r : records) {
    if (r.failed()) continue;
    auto &g = by_rank[detail::dimension_rank(r.config, d)];
    g.value = dimension_value(r.config, d);
    g.scores.push_back(record_score(r));
  }
  std::vector<ScoreGroup> out;
  for (auto &[rank, g] : by_rank) out.push_back(std::move(g));
  return out;
}

inline SensitivityReport sensitivity(const std::vector<EvaluationRecord> &records, Dimension d) {
  return one_way_anova(group_scores(records, d), std::string(to_string(d)));
}

inline void to_json(nlohmann::json &j, const SensitivityReport &s) {
  nlohmann::json groups = nlohmann::json::array();
  for (const auto &g : s.groups)
    groups.push_back({{"value", g.value}, {"n", g.n}, {"mean", g.mean}, {"sigma", g.sigma}});
  // Infinite F has no JSON number; it is written as the string "inf".
  j = {{"dimension", s.dimension},
       {"n", s.n},
       {"groups", groups},
       {"ss_between", s.ss_between},
       {"ss_within", s.ss_within},
       {"df_between", s.df_between},
       {"df_within", s.df_within},
       {"f", std::isinf(s.f) ? nlohmann::json("inf") : nlohmann::json(s.f)},
       {"p", s.p},
       {"eta_squared", s.eta_squared}};
}

} // namespace sceneval

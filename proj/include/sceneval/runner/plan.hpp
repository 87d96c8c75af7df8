#pragma once

// Phase plans: a target dimension plus parameter value lists that expand to
// concrete sampling configurations.

#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sceneval/core/config.hpp"
#include "sceneval/core/error.hpp"
#include "sceneval/frames/grids.hpp"

namespace sceneval {

/// "RxC", "1xN" (one row of all frames), "Nx1" or "all" (every layout that
/// holds the frame count exactly).
struct GridSpec {
  enum class Kind { Explicit, Row, Column, All } kind = Kind::Explicit;
  GridLayout grid{1, 1};

  static GridSpec parse(const std::string &s) {
    if (s == "1xN" || s == "1xn") return {Kind::Row, {}};
    if (s == "Nx1" || s == "nx1") return {Kind::Column, {}};
    if (s == "all") return {Kind::All, {}};
    return {Kind::Explicit, GridLayout::parse(s)};
  }

  std::string to_string() const {
    switch (kind) {
    case Kind::Row: return "1xN";
    case Kind::Column: return "Nx1";
    case Kind::All: return "all";
    case Kind::Explicit: return grid.to_string();
    }
    return grid.to_string();
  }

  friend bool operator==(const GridSpec &, const GridSpec &) = default;
};

/// Parameter names: resolution (levels), interval_ms, frames, grid, mode.
struct PhasePlan {
  int phase = 1;
  std::string name;
  Dimension dimension = Dimension::Resolution;
  nlohmann::json varied = nlohmann::json::object();
  nlohmann::json fixed = nlohmann::json::object();
  int evaluations_per_config = 10;
  std::uint64_t seed = 0;

  friend bool operator==(const PhasePlan &a, const PhasePlan &b) {
    return a.phase == b.phase && a.name == b.name && a.dimension == b.dimension && a.varied == b.varied &&
           a.fixed == b.fixed && a.evaluations_per_config == b.evaluations_per_config && a.seed == b.seed;
  }
};

inline void to_json(nlohmann::json &j, const PhasePlan &p) {
  j = {{"phase", p.phase},
       {"name", p.name},
       {"dimension", std::string(to_string(p.dimension))},
       {"varied", p.varied},
       {"fixed", p.fixed},
       {"evaluations_per_config", p.evaluations_per_config},
       {"seed", p.seed}};
}

inline void from_json(const nlohmann::json &j, PhasePlan &p) {
  try {
    p.phase = j.at("phase").get<int>();
    p.name = j.value("name", std::string());
    p.dimension = parse_dimension(j.at("dimension").get<std::string>());
    p.varied = j.at("varied");
    p.fixed = j.value("fixed", nlohmann::json::object());
    p.evaluations_per_config = j.value("evaluations_per_config", 10);
    p.seed = j.value("seed", std::uint64_t{0});
  } catch (const nlohmann::json::exception &e) {
    throw ConfigError(std::string("phase plan: ") + e.what());
  }
}

namespace detail {

inline const char *parameter_key(Dimension d) {
  switch (d) {
  case Dimension::Resolution: return "resolution";
  case Dimension::Frames: return "frames";
  case Dimension::Interval: return "interval_ms";
  case Dimension::Grid: return "grid";
  case Dimension::Mode: return "mode";
  }
  return "resolution";
}

template <typename T>
std::vector<T> as_list(const nlohmann::json &v, const std::string &key) {
  try {
    if (v.is_array()) return v.get<std::vector<T>>();
    return {v.get<T>()};
  } catch (const nlohmann::json::exception &) {
    throw ConfigError("phase plan: parameter '" + key + "' has the wrong type");
  }
}

} // namespace detail

/// Merged parameter lists after the disjointness and coverage checks.
struct PlanParameters {
  std::vector<int> resolution;
  std::vector<int> interval_ms;
  std::optional<std::vector<int>> frames;
  std::vector<GridSpec> grid;
  std::vector<PresentationMode> mode;
};

inline PlanParameters plan_parameters(const PhasePlan &plan) {
  const std::string at = "phase " + std::to_string(plan.phase) + ": ";
  if (plan.phase < 1 || plan.phase > 5) throw ConfigError(at + "phase must be in 1..5");
  if (plan.evaluations_per_config < 1) throw ConfigError(at + "evaluations_per_config must be >= 1");
  if (!plan.varied.is_object() || !plan.fixed.is_object())
    throw ConfigError(at + "varied and fixed must be objects");
  static const std::set<std::string> known{"resolution", "interval_ms", "frames", "grid", "mode"};
  nlohmann::json merged = nlohmann::json::object();
  for (const auto *part : {&plan.varied, &plan.fixed}) {
    for (const auto &[k, v] : part->items()) {
      if (!known.count(k)) throw ConfigError(at + "unknown parameter '" + k + "'");
      if (merged.contains(k)) throw ConfigError(at + "parameter '" + k + "' is both varied and fixed");
      if (v.is_array() && v.empty()) throw ConfigError(at + "parameter '" + k + "' has no values");
      merged[k] = v;
    }
  }
  if (!plan.varied.contains(detail::parameter_key(plan.dimension)))
    throw ConfigError(at + "target dimension '" + std::string(to_string(plan.dimension)) + "' is not varied");
  for (const char *k : {"resolution", "interval_ms", "grid", "mode"})
    if (!merged.contains(k)) throw ConfigError(at + "parameter '" + std::string(k) + "' is missing");

  PlanParameters p;
  p.resolution = detail::as_list<int>(merged["resolution"], "resolution");
  p.interval_ms = detail::as_list<int>(merged["interval_ms"], "interval_ms");
  if (merged.contains("frames")) p.frames = detail::as_list<int>(merged["frames"], "frames");
  for (const auto &g : detail::as_list<std::string>(merged["grid"], "grid")) p.grid.push_back(GridSpec::parse(g));
  for (const auto &m : detail::as_list<std::string>(merged["mode"], "mode")) p.mode.push_back(parse_presentation_mode(m));
  for (const auto &g : p.grid)
    if (!p.frames && (g.kind == GridSpec::Kind::Row || g.kind == GridSpec::Kind::Column))
      throw ConfigError(at + "grid '" + g.to_string() + "' needs a frames parameter");
  return p;
}

/// Cross product of all parameter values, validated and deduplicated in
/// first-seen order.
inline std::vector<SamplingConfig> expand_phase(const PhasePlan &plan) {
  const auto p = plan_parameters(plan);
  const std::string at = "phase " + std::to_string(plan.phase) + ": ";

  std::vector<std::pair<int, GridLayout>> layouts; // (frame count, grid)
  for (const auto &spec : p.grid) {
    std::vector<int> counts;
    if (p.frames)
      counts = *p.frames;
    else if (spec.kind == GridSpec::Kind::Explicit)
      counts = {spec.grid.cells()};
    else
      for (int n = 1; n <= SamplingConfig::kMaxFrames; ++n) counts.push_back(n);
    for (int n : counts) {
      if (n < 1 || n > SamplingConfig::kMaxFrames) throw ConfigError(at + "frame count " + std::to_string(n) + " out of range");
      switch (spec.kind) {
      case GridSpec::Kind::Row: layouts.push_back({n, {1, n}}); break;
      case GridSpec::Kind::Column: layouts.push_back({n, {n, 1}}); break;
      case GridSpec::Kind::Explicit: layouts.push_back({n, spec.grid}); break;
      case GridSpec::Kind::All:
        for (const auto &g : enumerate_grids(n)) layouts.push_back({n, g});
        break;
      }
    }
  }

  std::vector<SamplingConfig> out;
  std::set<std::string> seen;
  for (auto mode : p.mode)
    for (int level : p.resolution)
      for (int interval : p.interval_ms)
        for (const auto &[n, grid] : layouts) {
          SamplingConfig c;
          try {
            c = SamplingConfig{interval, n, Resolution::from_level(level), grid, mode};
            c.validate();
          } catch (const ConfigError &e) {
            throw ConfigError(at + "inconsistent plan: " + e.what());
          }
          if (seen.insert(c.id()).second) out.push_back(c);
        }
  return out;
}

struct PhaseConfig {
  int phase = 1;
  SamplingConfig config;
};

/// Phase-tagged configurations of several plans; a config shared by two
/// phases appears once per phase.
inline std::vector<PhaseConfig> expand_protocol(const std::vector<PhasePlan> &plans) {
  std::vector<PhaseConfig> out;
  for (const auto &plan : plans)
    for (const auto &c : expand_phase(plan)) out.push_back({plan.phase, c});
  return out;
}

/// The five-phase protocol: resolution, frame count, interval, grid layout
/// and presentation mode, each at 10 evaluations per configuration.
inline std::vector<PhasePlan> default_plans(std::uint64_t seed = 2025) {
  using nlohmann::json;
  const json extremes = json::array({1, 6});
  std::vector<PhasePlan> plans;
  plans.push_back({1, "resolution", Dimension::Resolution, {{"resolution", {1, 2, 3, 4, 5, 6}}},
                   {{"interval_ms", 200}, {"frames", 4}, {"grid", "2x2"}, {"mode", "collage"}}, 10, seed});
  plans.push_back({2, "frame count", Dimension::Frames, {{"frames", {1, 2, 3, 4, 5, 6, 7, 8, 9, 10}}},
                   {{"resolution", extremes}, {"interval_ms", 200}, {"grid", "1xN"}, {"mode", "collage"}}, 10, seed});
  plans.push_back({3, "temporal interval", Dimension::Interval,
                   {{"interval_ms", {100, 200, 300, 400, 500, 600, 700, 800, 900, 1000}}},
                   {{"resolution", extremes}, {"frames", 4}, {"grid", "1x4"}, {"mode", "collage"}}, 10, seed});
  plans.push_back({4, "grid layout", Dimension::Grid, {{"grid", "all"}},
                   {{"resolution", extremes}, {"interval_ms", 200}, {"mode", "collage"}}, 10, seed});
  plans.push_back({5, "presentation mode", Dimension::Mode, {{"mode", {"collage", "separate", "batch"}}},
                   {{"resolution", extremes}, {"interval_ms", 200}, {"frames", 4}, {"grid", "2x2"}}, 10, seed});
  return plans;
}

inline PhasePlan load_plan(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open phase plan " + path);
  try {
    auto plan = nlohmann::json::parse(in).get<PhasePlan>();
    plan_parameters(plan);
    return plan;
  } catch (const nlohmann::json::parse_error &e) {
    throw ConfigError("phase plan " + path + ": " + e.what());
  }
}

} // namespace sceneval

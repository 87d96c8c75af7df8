#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sceneval/metrics/score.hpp"

namespace sceneval {

struct FamilyStats {
  std::string family;
  std::vector<std::string> models; // sorted
  double mean = 0.0;
  double sigma = 0.0; // population, over per-model accuracies
};

/// Families ordered by mean accuracy, highest first; ties by name. Models
/// missing from family_of fall into "other".
inline std::vector<FamilyStats> family_stats(const std::map<std::string, double> &accuracy_by_model,
                                             const std::map<std::string, std::string> &family_of) {
  std::map<std::string, std::vector<std::pair<std::string, double>>> members;
  for (const auto &[model, acc] : accuracy_by_model) {
    auto it = family_of.find(model);
    members[it == family_of.end() ? "other" : it->second].emplace_back(model, acc);
  }
  std::vector<FamilyStats> out;
  for (const auto &[family, ms] : members) {
    FamilyStats f;
    f.family = family;
    double sum = 0.0;
    for (const auto &[m, a] : ms) {
      f.models.push_back(m);
      sum += a;
    }
    f.mean = sum / static_cast<double>(ms.size());
    double ss = 0.0;
    for (const auto &[m, a] : ms) ss += (a - f.mean) * (a - f.mean);
    f.sigma = std::sqrt(ss / static_cast<double>(ms.size()));
    out.push_back(std::move(f));
  }
  std::stable_sort(out.begin(), out.end(), [](const FamilyStats &a, const FamilyStats &b) { return a.mean > b.mean; });
  return out;
}

inline std::vector<FamilyStats> family_stats(const std::map<std::string, MetricsReport> &reports,
                                             const std::map<std::string, std::string> &family_of) {
  std::map<std::string, double> acc;
  for (const auto &[model, r] : reports) acc[model] = r.accuracy;
  return family_stats(acc, family_of);
}

inline void to_json(nlohmann::json &j, const FamilyStats &f) {
  j = {{"family", f.family}, {"models", f.models}, {"mean", f.mean}, {"sigma", f.sigma}};
}

} // namespace sceneval

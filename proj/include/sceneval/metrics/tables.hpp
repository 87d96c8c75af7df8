#pragma once

// Report tables (one row per subject: overall metrics, per-category F1, mean
// query time) and box-plot summaries of per-record scores.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sceneval/metrics/anova.hpp"
#include "sceneval/metrics/score.hpp"

namespace sceneval {

/// Cells are strings or numbers.
struct Table {
  std::vector<std::string> headers;
  std::vector<std::vector<nlohmann::json>> rows;
};

/// Columns: subject, accuracy, precision, recall, f1, one F1 per category,
/// mean query time. Headers come from the schema so an empty set still has them.
inline Table metrics_table(const std::vector<MetricsReport> &reports, const AnnotationSchema &schema) {
  Table t;
  t.headers = {"subject", "accuracy", "precision", "recall", "f1"};
  for (const auto &c : schema.categories()) t.headers.push_back((c.short_name.empty() ? c.name : c.short_name) + " F1");
  t.headers.push_back("avg_query_time_s");
  for (const auto &r : reports) {
    if (r.categories.size() != schema.size())
      throw SchemaError(r.subject_id, "report has " + std::to_string(r.categories.size()) + " categories, schema has " +
                                          std::to_string(schema.size()));
    std::vector<nlohmann::json> row = {r.subject_id, r.accuracy, r.precision, r.recall, r.f1};
    for (const auto &c : r.categories) row.emplace_back(c.f1);
    row.emplace_back(r.mean_latency_s);
    t.rows.push_back(std::move(row));
  }
  return t;
}

namespace detail {

inline std::string cell_text(const nlohmann::json &cell, int precision) {
  if (cell.is_string()) return cell.get<std::string>();
  if (cell.is_number_integer() || cell.is_number_unsigned()) return cell.dump();
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, cell.get<double>());
  return buf;
}

inline std::string csv_escape(const std::string &s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

} // namespace detail

inline std::string render_csv(const Table &t) {
  std::ostringstream out;
  for (std::size_t i = 0; i < t.headers.size(); ++i) out << (i ? "," : "") << detail::csv_escape(t.headers[i]);
  out << "\n";
  for (const auto &row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << detail::csv_escape(detail::cell_text(row[i], 6));
    out << "\n";
  }
  return out.str();
}

/// Array of objects keyed by header.
inline nlohmann::json render_json(const Table &t) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto &row : t.rows) {
    nlohmann::json o = nlohmann::json::object();
    for (std::size_t i = 0; i < row.size(); ++i) o[t.headers[i]] = row[i];
    out.push_back(o);
  }
  return out;
}

inline std::string render_text(const Table &t) {
  std::vector<std::vector<std::string>> cells;
  cells.push_back(t.headers);
  for (const auto &row : t.rows) {
    std::vector<std::string> r;
    for (const auto &c : row) r.push_back(detail::cell_text(c, 3));
    cells.push_back(std::move(r));
  }
  std::vector<std::size_t> width(t.headers.size(), 0);
  for (const auto &r : cells)
    for (std::size_t i = 0; i < r.size(); ++i) width[i] = std::max(width[i], r[i].size());
  std::ostringstream out;
  for (std::size_t n = 0; n < cells.size(); ++n) {
    for (std::size_t i = 0; i < cells[n].size(); ++i) {
      const auto &s = cells[n][i];
      const std::string pad(width[i] - s.size(), ' ');
      out << (i ? "  " : "") << (i == 0 ? s + pad : pad + s);
    }
    out << "\n";
    if (n == 0) {
      std::size_t total = 0;
      for (auto w : width) total += w + 2;
      out << std::string(total > 2 ? total - 2 : 0, '-') << "\n";
    }
  }
  return out.str();
}

// Distributions ---------------------------------------------------------------

/// Linear interpolation between order statistics: h = (n-1)q, x[floor h] plus
/// the fractional part of the gap to the next one. `sorted` must be ascending.
inline double quantile(const std::vector<double> &sorted, double q) {
  if (sorted.empty()) throw PreconditionError("quantile of an empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

struct BoxSummary {
  std::string value;
  std::size_t n = 0;
  double min = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0, max = 0.0, mean = 0.0;
  /// Most extreme observations within 1.5 IQR of the box.
  double lower_whisker = 0.0, upper_whisker = 0.0;
  std::vector<double> outliers;
};

inline BoxSummary box_summary(std::vector<double> xs, std::string value = {}) {
  if (xs.empty()) throw PreconditionError("box summary of an empty sample");
  std::sort(xs.begin(), xs.end());
  BoxSummary b;
  b.value = std::move(value);
  b.n = xs.size();
  b.min = xs.front();
  b.max = xs.back();
  b.q1 = quantile(xs, 0.25);
  b.median = quantile(xs, 0.5);
  b.q3 = quantile(xs, 0.75);
  double sum = 0.0;
  for (double x : xs) sum += x;
  b.mean = sum / static_cast<double>(xs.size());
  const double iqr = b.q3 - b.q1;
  const double lo_fence = b.q1 - 1.5 * iqr, hi_fence = b.q3 + 1.5 * iqr;
  b.lower_whisker = b.q1;
  b.upper_whisker = b.q3;
  for (double x : xs) {
    if (x < lo_fence || x > hi_fence) {
      b.outliers.push_back(x);
      continue;
    }
    b.lower_whisker = std::min(b.lower_whisker, x);
    b.upper_whisker = std::max(b.upper_whisker, x);
  }
  return b;
}

inline std::vector<BoxSummary> box_summaries(const std::vector<ScoreGroup> &groups) {
  std::vector<BoxSummary> out;
  for (const auto &g : groups) out.push_back(box_summary(g.scores, g.value));
  return out;
}

inline void to_json(nlohmann::json &j, const BoxSummary &b) {
  j = {{"value", b.value},   {"n", b.n},           {"min", b.min},
       {"q1", b.q1},         {"median", b.median}, {"q3", b.q3},
       {"max", b.max},       {"mean", b.mean},     {"lower_whisker", b.lower_whisker},
       {"upper_whisker", b.upper_whisker},         {"outliers", b.outliers}};
}

} // namespace sceneval

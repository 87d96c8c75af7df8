#pragma once

// Composite score and per-category classification metrics over evaluation
// records. Aggregation is integer counting, so partial accumulators merge
// associatively and the merged result equals a sequential pass bit for bit.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sceneval/core/error.hpp"
#include "sceneval/core/schema.hpp"
#include "sceneval/core/weights.hpp"
#include "sceneval/runner/record.hpp"

namespace sceneval {

struct ScoreOptions {
  /// Count refusals and unparseable answers as wrong in every category
  /// instead of leaving them out of the accuracy denominators.
  bool strict = false;
};

struct OptionMetrics {
  char letter = 'A';
  std::size_t support = 0; // truth count
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct CategoryMetrics {
  std::string name;
  std::string short_name;
  /// confusion[t][p]: parsed records with truth option t answered as p.
  std::vector<std::vector<std::size_t>> confusion;
  std::size_t counted = 0; // accuracy denominator
  std::size_t correct = 0;
  double accuracy = 0.0;   // S_i
  std::vector<OptionMetrics> options;
  /// Unweighted mean over options present in truth.
  double precision = 0.0, recall = 0.0, f1 = 0.0;
  /// Support-weighted mean over the same options.
  double weighted_precision = 0.0, weighted_recall = 0.0, weighted_f1 = 0.0;
};

struct MetricsReport {
  std::string subject_id;
  SubjectKind subject_kind = SubjectKind::Model;
  std::string schema_id;
  bool strict = false;
  std::vector<double> weights;
  std::vector<CategoryMetrics> categories;

  double score = 0.0;    // sum of alpha_i * S_i
  double accuracy = 0.0; // equal-weight mean of S_i
  double precision = 0.0, recall = 0.0, f1 = 0.0; // mean of category macro values
  double exact_match = 0.0;                        // parsed records matching every category

  std::size_t records = 0; // all records, failures included
  std::size_t failed = 0;  // no answer reached the harness
  std::size_t answered = 0;
  std::size_t parsed = 0;
  std::size_t refusals = 0;
  std::size_t unparseable = 0;
  double refusal_rate = 0.0;     // over answered records
  double unparseable_rate = 0.0; // over answered records
  double mean_latency_s = 0.0;   // over answered records
};

/// sum(alpha_i * v_i). Equal weights use the factored form sum(v_i) / n, which
/// makes the composite identical to the plain mean of the values.
inline double weighted_sum(const std::vector<double> &values, const std::vector<double> &alpha) {
  bool equal = true;
  for (double a : alpha) equal = equal && a == alpha.front();
  double s = 0.0;
  if (equal) {
    for (double v : values) s += v;
    return s / static_cast<double>(values.size());
  }
  for (std::size_t i = 0; i < values.size(); ++i) s += alpha[i] * values[i];
  return s;
}

class ScoreAccumulator {
public:
  explicit ScoreAccumulator(const AnnotationSchema &schema, ScoreOptions options = {})
      : schema_(&schema), options_(options) {
    for (const auto &c : schema.categories()) {
      const auto k = c.options.size();
      confusion_.emplace_back(k, std::vector<std::size_t>(k, 0));
    }
    correct_.assign(schema.size(), 0);
  }

  void add(const EvaluationRecord &r) {
    const auto &schema = *schema_;
    check_key(r.truth.key, r.record_id, "truth");
    ++records_;
    if (subject_id_.empty()) {
      subject_id_ = r.subject_id;
      subject_kind_ = r.subject_kind;
    }
    if (r.failed()) {
      ++failed_;
      return;
    }
    ++answered_;
    latency_ns_ += static_cast<std::int64_t>(std::llround(r.latency_s * 1e9));
    switch (r.predicted.status) {
    case ParseStatus::Refusal: ++refusals_; return;
    case ParseStatus::Unparseable: ++unparseable_; return;
    case ParseStatus::Parsed: break;
    }
    if (!r.predicted.key) throw SchemaError(r.record_id, "parsed record without a key");
    const auto &pred = *r.predicted.key;
    check_key(pred, r.record_id, "predicted");
    ++parsed_;
    bool all = true;
    for (std::size_t i = 0; i < schema.size(); ++i) {
      const auto t = schema.category(i).option_index(r.truth.key[i]);
      const auto p = schema.category(i).option_index(pred[i]);
      ++confusion_[i][t][p];
      correct_[i] += t == p;
      all = all && t == p;
    }
    exact_ += all;
  }

  void merge(const ScoreAccumulator &o) {
    if (!(*o.schema_ == *schema_) || o.options_.strict != options_.strict)
      throw ConfigError("cannot merge accumulators over different schemas or modes");
    for (std::size_t i = 0; i < confusion_.size(); ++i)
      for (std::size_t t = 0; t < confusion_[i].size(); ++t)
        for (std::size_t p = 0; p < confusion_[i][t].size(); ++p) confusion_[i][t][p] += o.confusion_[i][t][p];
    for (std::size_t i = 0; i < correct_.size(); ++i) correct_[i] += o.correct_[i];
    records_ += o.records_;
    failed_ += o.failed_;
    answered_ += o.answered_;
    parsed_ += o.parsed_;
    refusals_ += o.refusals_;
    unparseable_ += o.unparseable_;
    exact_ += o.exact_;
    latency_ns_ += o.latency_ns_;
    if (subject_id_.empty()) {
      subject_id_ = o.subject_id_;
      subject_kind_ = o.subject_kind_;
    }
  }

  std::size_t records() const { return records_; }

  MetricsReport finish(const ScoreWeights &weights) const {
    const auto &schema = *schema_;
    if (records_ == 0) throw PreconditionError("no records to score");
    if (weights.size() != schema.size())
      throw ConfigError("weights cover " + std::to_string(weights.size()) + " categories, schema has " +
                        std::to_string(schema.size()));
    MetricsReport m;
    m.subject_id = subject_id_;
    m.subject_kind = subject_kind_;
    m.schema_id = schema.schema_id();
    m.strict = options_.strict;
    m.weights = weights.alpha();
    m.records = records_;
    m.failed = failed_;
    m.answered = answered_;
    m.parsed = parsed_;
    m.refusals = refusals_;
    m.unparseable = unparseable_;
    m.refusal_rate = ratio(refusals_, answered_);
    m.unparseable_rate = ratio(unparseable_, answered_);
    m.exact_match = ratio(exact_, options_.strict ? answered_ : parsed_);
    m.mean_latency_s = answered_ ? static_cast<double>(latency_ns_) / static_cast<double>(answered_) / 1e9 : 0.0;

    std::vector<double> acc, prec, rec, f1;
    for (std::size_t i = 0; i < schema.size(); ++i) {
      const auto &cat = schema.category(i);
      CategoryMetrics c;
      c.name = cat.name;
      c.short_name = cat.short_name;
      c.confusion = confusion_[i];
      c.counted = options_.strict ? answered_ : parsed_;
      c.correct = correct_[i];
      c.accuracy = ratio(c.correct, c.counted);
      fill_option_metrics(c, cat);
      acc.push_back(c.accuracy);
      prec.push_back(c.precision);
      rec.push_back(c.recall);
      f1.push_back(c.f1);
      m.categories.push_back(std::move(c));
    }
    m.score = weighted_sum(acc, m.weights);
    const auto equal = ScoreWeights::equal(schema.size()).alpha();
    m.accuracy = weighted_sum(acc, equal);
    m.precision = weighted_sum(prec, equal);
    m.recall = weighted_sum(rec, equal);
    m.f1 = weighted_sum(f1, equal);
    return m;
  }

private:
  static double ratio(std::size_t a, std::size_t b) { return b ? static_cast<double>(a) / static_cast<double>(b) : 0.0; }

  void check_key(const AnswerKey &key, const std::string &record_id, const char *which) const {
    auto v = validate_key(key, *schema_);
    if (!v.valid()) throw SchemaError(record_id + "." + which, v.message);
  }

  static void fill_option_metrics(CategoryMetrics &c, const Category &cat) {
    const auto k = cat.options.size();
    std::size_t present = 0, support_total = 0;
    for (std::size_t o = 0; o < k; ++o) {
      std::size_t tp = c.confusion[o][o], row = 0, col = 0;
      for (std::size_t x = 0; x < k; ++x) {
        row += c.confusion[o][x];
        col += c.confusion[x][o];
      }
      OptionMetrics om;
      om.letter = cat.options[o].letter;
      om.support = row;
      om.precision = ratio(tp, col);
      om.recall = ratio(tp, row);
      om.f1 = om.precision + om.recall > 0 ? 2 * om.precision * om.recall / (om.precision + om.recall) : 0.0;
      c.options.push_back(om);
      if (row == 0) continue; // absent from truth: left out of the averages
      ++present;
      support_total += row;
      c.precision += om.precision;
      c.recall += om.recall;
      c.f1 += om.f1;
      const double w = static_cast<double>(row);
      c.weighted_precision += w * om.precision;
      c.weighted_recall += w * om.recall;
      c.weighted_f1 += w * om.f1;
    }
    if (present) {
      c.precision /= static_cast<double>(present);
      c.recall /= static_cast<double>(present);
      c.f1 /= static_cast<double>(present);
      c.weighted_precision /= static_cast<double>(support_total);
      c.weighted_recall /= static_cast<double>(support_total);
      c.weighted_f1 /= static_cast<double>(support_total);
    }
  }

  const AnnotationSchema *schema_;
  ScoreOptions options_;
  std::vector<std::vector<std::vector<std::size_t>>> confusion_;
  std::vector<std::size_t> correct_;
  std::size_t records_ = 0, failed_ = 0, answered_ = 0, parsed_ = 0, refusals_ = 0, unparseable_ = 0, exact_ = 0;
  std::int64_t latency_ns_ = 0;
  std::string subject_id_;
  SubjectKind subject_kind_ = SubjectKind::Model;
};

inline MetricsReport score(const std::vector<EvaluationRecord> &records, const AnnotationSchema &schema,
                           const ScoreWeights &weights, ScoreOptions options = {}) {
  if (records.empty()) throw PreconditionError("no records to score");
  ScoreAccumulator acc(schema, options);
  for (const auto &r : records) acc.add(r);
  return acc.finish(weights);
}

inline MetricsReport score(const std::vector<EvaluationRecord> &records, const AnnotationSchema &schema,
                           ScoreOptions options = {}) {
  return score(records, schema, ScoreWeights::equal(schema.size()), options);
}

/// Equal-weight category accuracy of one answered record; refusals and
/// unparseable answers score 0. Failed records have no score.
inline double record_score(const EvaluationRecord &r) {
  if (!r.predicted.parsed() || !r.predicted.key) return 0.0;
  const auto &pred = *r.predicted.key;
  const std::size_t n = r.truth.key.size();
  std::size_t hits = 0;
  for (std::size_t i = 0; i < n && i < pred.size(); ++i) hits += pred[i] == r.truth.key[i];
  return static_cast<double>(hits) / static_cast<double>(n);
}

inline void to_json(nlohmann::json &j, const CategoryMetrics &c) {
  nlohmann::json options = nlohmann::json::array();
  for (const auto &o : c.options)
    options.push_back({{"letter", std::string(1, o.letter)},
                       {"support", o.support},
                       {"precision", o.precision},
                       {"recall", o.recall},
                       {"f1", o.f1}});
  j = {{"name", c.name},
       {"short_name", c.short_name},
       {"confusion", c.confusion},
       {"counted", c.counted},
       {"correct", c.correct},
       {"accuracy", c.accuracy},
       {"precision", c.precision},
       {"recall", c.recall},
       {"f1", c.f1},
       {"weighted_precision", c.weighted_precision},
       {"weighted_recall", c.weighted_recall},
       {"weighted_f1", c.weighted_f1},
       {"options", options}};
}

inline void to_json(nlohmann::json &j, const MetricsReport &m) {
  j = {{"subject_id", m.subject_id},
       {"subject_kind", m.subject_kind == SubjectKind::Model ? "model" : "human"},
       {"schema_id", m.schema_id},
       {"averaging", "macro"},
       {"strict", m.strict},
       {"weights", m.weights},
       {"score", m.score},
       {"accuracy", m.accuracy},
       {"precision", m.precision},
       {"recall", m.recall},
       {"f1", m.f1},
       {"exact_match", m.exact_match},
       {"records", m.records},
       {"failed", m.failed},
       {"answered", m.answered},
       {"parsed", m.parsed},
       {"refusals", m.refusals},
       {"unparseable", m.unparseable},
       {"refusal_rate", m.refusal_rate},
       {"unparseable_rate", m.unparseable_rate},
       {"mean_latency_s", m.mean_latency_s},
       {"categories", m.categories}};
}

} // namespace sceneval

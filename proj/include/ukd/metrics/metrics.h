#ifndef UKD_METRICS_METRICS_H_
#define UKD_METRICS_METRICS_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ukd/data/dataset.h"

namespace ukd::metrics {

struct ScoredSample {
  std::int64_t sample_id = 0;
  double score = 0.0;
  int label = 0;
  std::optional<double> propensity;  // in (0, 1] when present

  double weight() const { return 1.0 / *propensity; }
};

// Probability that a random positive outscores a random negative, ties
// counting one half. Rank based, O(n log n). Absent for single-class input.
std::optional<double> Auc(std::span<const ScoredSample> samples);

// Pairwise AUC with every (positive i, negative j) pair weighted by
// w_i * w_j, w = 1 / propensity, normalised by the product of the class
// weight sums. Ties contribute half their joint weight. Throws UsageError if
// any propensity is missing or not in (0, 1].
std::optional<double> DAuc(std::span<const ScoredSample> samples);

// Mean cross-entropy of clipped scores. Absent on empty input.
std::optional<double> Nll(std::span<const ScoredSample> samples);
// sum w_i * NLL_i / sum w_i.
std::optional<double> DNll(std::span<const ScoredSample> samples);

// Shared weighted rank accumulation behind Auc and DAuc.
std::optional<double> WeightedAuc(std::span<const double> scores,
                                  std::span<const int> labels,
                                  std::span<const double> weights);

struct CtcvrMetrics {
  std::optional<double> auc;
  std::optional<double> nll;
};

// Scores every impression with p_CTR * p_CVR and evaluates against y_pv_conv.
CtcvrMetrics ComputeCtcvrMetrics(std::span<const double> cvr_scores,
                                 std::span<const double> ctr_scores,
                                 const data::Dataset& impressions);

// AUC of predicted CVR over every impression against counterfactual labels.
std::optional<double> EntireSpaceOracleAuc(std::span<const double> cvr_scores,
                                           std::span<const int> labels);

struct MetricReport {
  std::optional<double> auc_cvr;
  std::optional<double> nll_cvr;
  std::optional<double> d_auc_cvr;
  std::optional<double> d_nll_cvr;
  std::optional<double> auc_ctcvr;
  std::optional<double> nll_ctcvr;
  std::optional<double> oracle_auc_cvr_entire_space;
  std::size_t n_impressions = 0;
  std::size_t n_clicked = 0;
  std::size_t n_converted = 0;

  // Flat "key=value" lines; missing metrics are written as "absent".
  std::string ToKeyValue() const;
  static MetricReport FromKeyValue(const std::string& text);
  static std::string CsvHeader();
  std::string CsvRow(const std::string& model, const std::string& split) const;

  // Metric names in report order, with accessors for table building.
  static const std::vector<std::string>& MetricNames();
  std::optional<double> Get(const std::string& name) const;
  void Set(const std::string& name, std::optional<double> value);
};

// Full report for one model on one split. `ctr_scores` come from the shared
// reference CTR model and act both as the CTCVR factor and as propensities.
// `counterfactual_labels` may be empty for non-synthetic data.
MetricReport Evaluate(std::span<const double> cvr_scores,
                      std::span<const double> ctr_scores,
                      const data::Dataset& split,
                      std::span<const int> counterfactual_labels);

}  // namespace ukd::metrics

#endif  // UKD_METRICS_METRICS_H_

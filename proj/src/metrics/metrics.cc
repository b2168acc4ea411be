#include "ukd/metrics/metrics.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "ukd/common/errors.h"
#include "ukd/common/text.h"
#include "ukd/nn/ops.h"

namespace ukd::metrics {

namespace {

std::vector<double> ScaledToMax(std::span<const double> w) {
  double top = 0.0;
  for (double x : w) top = std::max(top, x);
  std::vector<double> out(w.begin(), w.end());
  if (top > 0.0) {
    for (double& x : out) x /= top;
  }
  return out;
}

}  // namespace

std::optional<double> WeightedAuc(std::span<const double> scores,
                                  std::span<const int> labels,
                                  std::span<const double> raw_weights) {
  const std::size_t n = scores.size();
  // Scaled so that equal weights become exactly 1.
  std::vector<double> weights = ScaledToMax(raw_weights);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] < scores[b];
  });
  double total_pos = 0.0;
  double total_neg = 0.0;
  double below_neg = 0.0;  // negative weight strictly below the current group
  double pairs = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    double group_pos = 0.0;
    double group_neg = 0.0;
    while (j < n && scores[order[j]] == scores[order[i]]) {
      (labels[order[j]] ? group_pos : group_neg) += weights[order[j]];
      ++j;
    }
    pairs += group_pos * (below_neg + 0.5 * group_neg);
    below_neg += group_neg;
    total_pos += group_pos;
    total_neg += group_neg;
    i = j;
  }
  if (total_pos <= 0.0 || total_neg <= 0.0) return std::nullopt;
  return pairs / (total_pos * total_neg);
}

namespace {

void Unpack(std::span<const ScoredSample> samples, bool weighted,
            std::vector<double>& scores, std::vector<int>& labels,
            std::vector<double>& weights) {
  scores.reserve(samples.size());
  labels.reserve(samples.size());
  weights.reserve(samples.size());
  for (const ScoredSample& s : samples) {
    scores.push_back(s.score);
    labels.push_back(s.label ? 1 : 0);
    if (weighted) {
      if (!s.propensity || !(*s.propensity > 0.0 && *s.propensity <= 1.0)) {
        throw UsageError("debiased metric needs a propensity in (0, 1] for "
                         "sample " + std::to_string(s.sample_id));
      }
      weights.push_back(s.weight());
    } else {
      weights.push_back(1.0);
    }
  }
}

double SampleNll(const ScoredSample& s) {
  return nn::CrossEntropy(nn::FromScore(s.score), nn::HardTarget(s.label));
}

}  // namespace

std::optional<double> Auc(std::span<const ScoredSample> samples) {
  std::vector<double> scores, weights;
  std::vector<int> labels;
  Unpack(samples, false, scores, labels, weights);
  return WeightedAuc(scores, labels, weights);
}

std::optional<double> DAuc(std::span<const ScoredSample> samples) {
  std::vector<double> scores, weights;
  std::vector<int> labels;
  Unpack(samples, true, scores, labels, weights);
  return WeightedAuc(scores, labels, weights);
}

std::optional<double> Nll(std::span<const ScoredSample> samples) {
  if (samples.empty()) return std::nullopt;
  double sum = 0.0;
  for (const ScoredSample& s : samples) sum += SampleNll(s);
  return sum / static_cast<double>(samples.size());
}

std::optional<double> DNll(std::span<const ScoredSample> samples) {
  if (samples.empty()) return std::nullopt;
  std::vector<double> scores, weights;
  std::vector<int> labels;
  Unpack(samples, true, scores, labels, weights);
  weights = ScaledToMax(weights);
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    num += weights[i] * SampleNll(samples[i]);
    den += weights[i];
  }
  return num / den;
}

CtcvrMetrics ComputeCtcvrMetrics(std::span<const double> cvr_scores,
                                 std::span<const double> ctr_scores,
                                 const data::Dataset& impressions) {
  if (cvr_scores.size() != impressions.size() ||
      ctr_scores.size() != impressions.size()) {
    throw UsageError("CTCVR metrics: score count does not match impressions");
  }
  std::vector<ScoredSample> samples(impressions.size());
  for (std::size_t i = 0; i < impressions.size(); ++i) {
    samples[i].sample_id = impressions.records[i].sample_id;
    samples[i].score = ctr_scores[i] * cvr_scores[i];
    samples[i].label = impressions.records[i].y_pv_conv;
  }
  return {Auc(samples), Nll(samples)};
}

std::optional<double> EntireSpaceOracleAuc(std::span<const double> cvr_scores,
                                           std::span<const int> labels) {
  if (cvr_scores.size() != labels.size()) {
    throw UsageError("oracle AUC: score count does not match label count");
  }
  std::vector<double> weights(labels.size(), 1.0);
  return WeightedAuc(cvr_scores, labels, weights);
}

const std::vector<std::string>& MetricReport::MetricNames() {
  static const std::vector<std::string> names = {
      "auc_ctcvr", "auc_cvr",  "d_auc_cvr", "nll_ctcvr",
      "nll_cvr",   "d_nll_cvr", "oracle_auc_cvr_entire_space"};
  return names;
}

std::optional<double> MetricReport::Get(const std::string& name) const {
  if (name == "auc_cvr") return auc_cvr;
  if (name == "nll_cvr") return nll_cvr;
  if (name == "d_auc_cvr") return d_auc_cvr;
  if (name == "d_nll_cvr") return d_nll_cvr;
  if (name == "auc_ctcvr") return auc_ctcvr;
  if (name == "nll_ctcvr") return nll_ctcvr;
  if (name == "oracle_auc_cvr_entire_space") return oracle_auc_cvr_entire_space;
  throw UsageError("unknown metric '" + name + "'");
}

void MetricReport::Set(const std::string& name, std::optional<double> value) {
  if (name == "auc_cvr") auc_cvr = value;
  else if (name == "nll_cvr") nll_cvr = value;
  else if (name == "d_auc_cvr") d_auc_cvr = value;
  else if (name == "d_nll_cvr") d_nll_cvr = value;
  else if (name == "auc_ctcvr") auc_ctcvr = value;
  else if (name == "nll_ctcvr") nll_ctcvr = value;
  else if (name == "oracle_auc_cvr_entire_space") oracle_auc_cvr_entire_space = value;
  else throw UsageError("unknown metric '" + name + "'");
}

std::string MetricReport::ToKeyValue() const {
  std::ostringstream out;
  for (const std::string& name : MetricNames()) {
    auto v = Get(name);
    out << name << '=' << (v ? FormatExact(*v) : std::string("absent")) << '\n';
  }
  out << "n_impressions=" << n_impressions << '\n';
  out << "n_clicked=" << n_clicked << '\n';
  out << "n_converted=" << n_converted << '\n';
  return out.str();
}

MetricReport MetricReport::FromKeyValue(const std::string& text) {
  MetricReport r;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (Trim(line).empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParseError("report line " + std::to_string(line_no) + ": missing '='");
    }
    std::string key(Trim(std::string_view(line).substr(0, eq)));
    std::string_view value = Trim(std::string_view(line).substr(eq + 1));
    if (key == "n_impressions" || key == "n_clicked" || key == "n_converted") {
      auto v = ParseInt(value);
      if (!v || *v < 0) {
        throw ParseError("report line " + std::to_string(line_no) + ": bad count");
      }
      auto count = static_cast<std::size_t>(*v);
      (key == "n_impressions" ? r.n_impressions
       : key == "n_clicked"   ? r.n_clicked
                              : r.n_converted) = count;
      continue;
    }
    std::optional<double> v;
    if (value != "absent") {
      v = ParseDouble(value);
      if (!v) {
        throw ParseError("report line " + std::to_string(line_no) +
                         ": bad value for " + key);
      }
    }
    r.Set(key, v);
  }
  return r;
}

std::string MetricReport::CsvHeader() {
  std::string h = "model,split";
  for (const std::string& name : MetricNames()) h += "," + name;
  h += ",n_impressions,n_clicked,n_converted";
  return h;
}

std::string MetricReport::CsvRow(const std::string& model,
                                 const std::string& split) const {
  std::string row = model + "," + split;
  for (const std::string& name : MetricNames()) {
    auto v = Get(name);
    row += "," + (v ? FormatExact(*v) : std::string("absent"));
  }
  row += "," + std::to_string(n_impressions) + "," + std::to_string(n_clicked) +
         "," + std::to_string(n_converted);
  return row;
}

MetricReport Evaluate(std::span<const double> cvr_scores,
                      std::span<const double> ctr_scores,
                      const data::Dataset& split,
                      std::span<const int> counterfactual_labels) {
  if (cvr_scores.size() != split.size() || ctr_scores.size() != split.size()) {
    throw UsageError("evaluate: score count does not match split size");
  }
  MetricReport report;
  report.n_impressions = split.size();
  std::vector<ScoredSample> clicked;
  for (std::size_t i = 0; i < split.size(); ++i) {
    const data::ImpressionRecord& r = split.records[i];
    if (!r.clicked()) continue;
    ScoredSample s;
    s.sample_id = r.sample_id;
    s.score = cvr_scores[i];
    s.label = r.conversion();
    s.propensity = std::clamp(ctr_scores[i], nn::kProbEpsilon, 1.0);
    clicked.push_back(s);
    report.n_converted += static_cast<std::size_t>(s.label);
  }
  report.n_clicked = clicked.size();
  report.auc_cvr = Auc(clicked);
  report.nll_cvr = Nll(clicked);
  report.d_auc_cvr = DAuc(clicked);
  report.d_nll_cvr = DNll(clicked);
  CtcvrMetrics ctcvr = ComputeCtcvrMetrics(cvr_scores, ctr_scores, split);
  report.auc_ctcvr = ctcvr.auc;
  report.nll_ctcvr = ctcvr.nll;
  if (!counterfactual_labels.empty()) {
    report.oracle_auc_cvr_entire_space =
        EntireSpaceOracleAuc(cvr_scores, counterfactual_labels);
  }
  return report;
}

}  // namespace ukd::metrics

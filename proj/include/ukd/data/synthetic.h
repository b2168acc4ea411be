#ifndef UKD_DATA_SYNTHETIC_H_
#define UKD_DATA_SYNTHETIC_H_

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ukd/data/dataset.h"

namespace ukd::data {

struct GeneratorConfig {
  std::int64_t n_impressions = 100000;
  std::uint32_t n_fields = 8;
  // One entry per field, or a single entry broadcast to every field.
  std::vector<std::uint32_t> cardinalities = {100};
  // Correlation between the per-category CTR and CVR weights, and therefore
  // between the true CTR and CVR logits.
  double ctr_cvr_correlation = 0.8;
  // Mean true CTR over all impressions.
  double base_ctr = 0.1;
  // Mean true CVR over all impressions.
  double base_cvr = 0.1;
  // Standard deviation of one field's contribution to each true logit.
  double ctr_weight_scale = 0.8;
  double cvr_weight_scale = 0.6;
  // Category popularity follows 1 / rank^exponent within each field.
  double zipf_exponent = 1.0;
  std::uint64_t seed = 1;

  // Throws ConfigError on a degenerate configuration.
  void Validate() const;
  std::vector<std::uint32_t> ResolvedCardinalities() const;

  friend bool operator==(const GeneratorConfig&,
                         const GeneratorConfig&) = default;
};

// Ground truth behind a synthetic dataset: logistic CTR and CVR models whose
// logits are an intercept plus one latent weight per (field, category).
struct OracleWorld {
  GeneratorConfig config;
  double ctr_intercept = 0.0;
  double cvr_intercept = 0.0;
  std::vector<std::vector<double>> ctr_weights;  // [field][category]
  std::vector<std::vector<double>> cvr_weights;
  // Fingerprint of every generated record, indexed by sample id.
  std::vector<std::uint64_t> record_hashes;

  double CtrLogit(const ImpressionRecord& r) const;
  double CvrLogit(const ImpressionRecord& r) const;
  double TrueCtr(const ImpressionRecord& r) const;
  double TrueCvr(const ImpressionRecord& r) const;
  bool Owns(const ImpressionRecord& r) const;

  void Save(const std::string& path) const;
  static OracleWorld Load(const std::string& path);

  friend bool operator==(const OracleWorld&, const OracleWorld&) = default;
};

std::uint64_t RecordHash(const ImpressionRecord& r);

struct SyntheticWorld {
  Dataset dataset;
  OracleWorld oracle;
};

// Draws features, then y_click ~ Bernoulli(p_CTR) and, for clicks,
// y_conv ~ Bernoulli(p_CVR). Intercepts are calibrated so the mean true CTR
// and CVR over the generated impressions equal base_ctr and base_cvr.
SyntheticWorld GenerateSynthetic(const GeneratorConfig& config);

// Would-be conversion label for every record: clicked records keep their
// logged y_conv, unclicked ones draw Bernoulli(true p_CVR) from a stream keyed
// by (seed, sample_id). Throws UsageError for records the oracle did not
// generate.
std::vector<int> CounterfactualLabels(const OracleWorld& oracle,
                                      const Dataset& dataset,
                                      std::uint64_t seed);

// Single draw of the counterfactual label stream.
int CounterfactualDraw(double p_cvr, std::uint64_t seed,
                       std::int64_t sample_id);

double Sigmoid(double x);

}  // namespace ukd::data

#endif  // UKD_DATA_SYNTHETIC_H_

#include "ukd/data/dataset.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "ukd/common/errors.h"
#include "ukd/common/random.h"

namespace ukd::data {

bool ImpressionRecord::LabelsConsistent() const {
  if (y_click == 0) return y_conv == ConvLabel::kUnknown && y_pv_conv == 0;
  if (y_click == 1) {
    return y_conv != ConvLabel::kUnknown &&
           y_pv_conv == static_cast<int>(y_conv);
  }
  return false;
}

void Dataset::Validate() const {
  for (const ImpressionRecord& r : records) {
    if (!r.LabelsConsistent()) {
      throw DataError("record " + std::to_string(r.sample_id) +
                      " has inconsistent click/conversion labels");
    }
    if (r.categories.size() != cardinalities.size()) {
      throw DataError("record " + std::to_string(r.sample_id) + " has " +
                      std::to_string(r.categories.size()) + " fields, expected " +
                      std::to_string(cardinalities.size()));
    }
    for (std::size_t f = 0; f < cardinalities.size(); ++f) {
      if (r.categories[f] >= cardinalities[f]) {
        throw DataError("record " + std::to_string(r.sample_id) + " field " +
                        std::to_string(f) + " category out of range");
      }
    }
  }
}

Dataset Dataset::Subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.cardinalities = cardinalities;
  out.records.reserve(indices.size());
  for (std::size_t i : indices) out.records.push_back(records[i]);
  return out;
}

std::size_t Dataset::CountClicked() const {
  return static_cast<std::size_t>(
      std::count_if(records.begin(), records.end(),
                    [](const ImpressionRecord& r) { return r.clicked(); }));
}

ClickSplit SplitByClick(const Dataset& dataset) {
  ClickSplit out;
  out.clicked.cardinalities = dataset.cardinalities;
  out.unclicked.cardinalities = dataset.cardinalities;
  for (const ImpressionRecord& r : dataset.records) {
    (r.clicked() ? out.clicked : out.unclicked).records.push_back(r);
  }
  return out;
}

DaySplit SplitByDay(const Dataset& dataset, int n_days) {
  if (n_days < 3) throw ConfigError("n_days must be at least 3");
  DaySplit out;
  out.train.cardinalities = dataset.cardinalities;
  out.validation.cardinalities = dataset.cardinalities;
  out.test.cardinalities = dataset.cardinalities;
  const std::size_t n = dataset.size();
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t day = i * static_cast<std::size_t>(n_days) / n;
    Dataset& dst = day + 1 == static_cast<std::size_t>(n_days)   ? out.test
                   : day + 2 == static_cast<std::size_t>(n_days) ? out.validation
                                                                 : out.train;
    dst.records.push_back(dataset.records[i]);
  }
  return out;
}

namespace {

// First `count` entries of a seeded Fisher-Yates shuffle of `pool`.
std::vector<std::size_t> SampleWithoutReplacement(std::vector<std::size_t> pool,
                                                  std::size_t count,
                                                  std::uint64_t seed) {
  Rng rng(seed);
  count = std::min(count, pool.size());
  for (std::size_t i = 0; i < count; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  pool.resize(count);
  return pool;
}

}  // namespace

NoisyDataset InjectLabelNoise(const Dataset& d_click, double k_percent,
                              std::uint64_t seed) {
  if (!(k_percent >= 0.0 && k_percent <= 100.0)) {
    throw ConfigError("noise percentage must lie in [0, 100]");
  }
  std::vector<std::size_t> positives;
  std::vector<std::size_t> negatives;
  for (std::size_t i = 0; i < d_click.size(); ++i) {
    const ImpressionRecord& r = d_click.records[i];
    if (!r.clicked()) {
      throw UsageError("label noise is only defined on clicked records");
    }
    (r.conversion() ? positives : negatives).push_back(i);
  }
  const auto flips = static_cast<std::size_t>(
      std::ceil(k_percent * static_cast<double>(positives.size()) / 100.0));
  if (flips > negatives.size()) {
    throw ConfigError("not enough negatives (" +
                      std::to_string(negatives.size()) + ") to flip " +
                      std::to_string(flips) + " labels");
  }
  NoisyDataset out;
  out.data = d_click;
  out.noise_mask.assign(d_click.size(), false);
  out.flipped_per_class = flips;
  auto flip_pos = SampleWithoutReplacement(positives, flips,
                                           DeriveSeed(seed, "noise-positive"));
  auto flip_neg = SampleWithoutReplacement(negatives, flips,
                                           DeriveSeed(seed, "noise-negative"));
  for (std::size_t i : flip_pos) {
    out.data.records[i].y_conv = ConvLabel::kNegative;
    out.data.records[i].y_pv_conv = 0;
    out.noise_mask[i] = true;
  }
  for (std::size_t i : flip_neg) {
    out.data.records[i].y_conv = ConvLabel::kPositive;
    out.data.records[i].y_pv_conv = 1;
    out.noise_mask[i] = true;
  }
  return out;
}

UnclickSample SampleUnclickRatio(const Dataset& d_click,
                                 const Dataset& d_unclick, double ratio,
                                 std::uint64_t seed) {
  if (!(ratio >= 0.0)) throw ConfigError("unclick ratio must be >= 0");
  UnclickSample out;
  auto want = static_cast<std::size_t>(
      std::llround(ratio * static_cast<double>(d_click.size())));
  if (want > d_unclick.size()) {
    out.truncated = true;
    out.data = d_unclick;
    return out;
  }
  std::vector<std::size_t> pool(d_unclick.size());
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  auto picked = SampleWithoutReplacement(std::move(pool), want, seed);
  std::sort(picked.begin(), picked.end());
  out.data = d_unclick.Subset(picked);
  return out;
}

}  // namespace ukd::data

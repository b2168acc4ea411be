#ifndef UKD_DATA_DATASET_H_
#define UKD_DATA_DATASET_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace ukd::data {

enum class ConvLabel : std::int8_t {
  kNegative = 0,
  kPositive = 1,
  kUnknown = -1,
};

// One logged impression. `categories[f]` is the one-hot category of field f.
struct ImpressionRecord {
  std::int64_t sample_id = 0;
  std::vector<std::uint32_t> categories;
  int y_click = 0;
  ConvLabel y_conv = ConvLabel::kUnknown;
  int y_pv_conv = 0;

  bool clicked() const { return y_click == 1; }
  // 0/1 conversion label; only meaningful when clicked.
  int conversion() const { return y_conv == ConvLabel::kPositive ? 1 : 0; }

  // y_click = 0 => y_conv unknown and y_pv_conv = 0;
  // y_click = 1 => y_conv known and y_pv_conv = y_conv.
  bool LabelsConsistent() const;

  friend bool operator==(const ImpressionRecord&,
                         const ImpressionRecord&) = default;
};

struct Dataset {
  std::vector<ImpressionRecord> records;
  std::vector<std::uint32_t> cardinalities;

  std::size_t size() const { return records.size(); }
  bool empty() const { return records.empty(); }

  // Throws DataError on label inconsistency, field count mismatch or a
  // category outside its field's cardinality.
  void Validate() const;
  Dataset Subset(std::span<const std::size_t> indices) const;
  std::size_t CountClicked() const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

struct ClickSplit {
  Dataset clicked;
  Dataset unclicked;
};

// Partition by y_click; relative order is preserved in both parts.
ClickSplit SplitByClick(const Dataset& dataset);

struct DaySplit {
  Dataset train;
  Dataset validation;
  Dataset test;
};

// Records are laid out in `n_days` contiguous blocks; the penultimate block is
// validation, the last is test, the rest is training data. n_days >= 3.
DaySplit SplitByDay(const Dataset& dataset, int n_days);

struct NoisyDataset {
  Dataset data;
  std::vector<bool> noise_mask;  // true where the label was flipped
  std::size_t flipped_per_class = 0;
};

// Flips ceil(k% of positives) labels 1 -> 0 and the same number of negatives
// 0 -> 1, so the positive count is preserved. Every record must be clicked.
// Throws ConfigError when there are not enough negatives.
NoisyDataset InjectLabelNoise(const Dataset& d_click, double k_percent,
                              std::uint64_t seed);

struct UnclickSample {
  Dataset data;
  bool truncated = false;  // requested more than available
};

// Uniform sample without replacement of round(ratio * |d_click|) unclicked
// records, kept in their original order.
UnclickSample SampleUnclickRatio(const Dataset& d_click,
                                 const Dataset& d_unclick, double ratio,
                                 std::uint64_t seed);

}  // namespace ukd::data

#endif  // UKD_DATA_DATASET_H_

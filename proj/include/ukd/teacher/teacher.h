#ifndef UKD_TEACHER_TEACHER_H_
#define UKD_TEACHER_TEACHER_H_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ukd/baselines/model.h"
#include "ukd/baselines/trainer.h"
#include "ukd/data/dataset.h"
#include "ukd/nn/graph.h"
#include "ukd/nn/tower.h"

namespace ukd::teacher {

struct TeacherConfig {
  std::size_t embedding_dim = 8;
  std::vector<std::size_t> learner_widths{64, 32};
  std::vector<std::size_t> predictor_widths{16};
  std::vector<std::size_t> discriminator_widths{32};
  double learning_rate = 0.005;
  std::size_t batch_size = 128;
  int epochs = 2;
  double domain_weight = 1.0;   // weight of the domain loss
  double reversal_scale = 1.0;
  double unclick_ratio = 1.0;   // unclicked : clicked records per batch
  bool adversarial = true;      // false trains on clicked records only

  void Validate() const;
  std::map<std::string, std::string> ToMeta() const;
  static TeacherConfig FromMeta(const std::map<std::string, std::string>& m);
  friend bool operator==(const TeacherConfig&, const TeacherConfig&) = default;
};

struct TeacherOutput {
  std::vector<double> hidden;            // h
  nn::Prob2 p_conv{0.5, 0.5};
  std::optional<nn::Prob2> p_domain;     // absent in infer mode
};

struct TeacherTrace {
  std::vector<double> embedding;
  nn::TowerTrace cvr;
  nn::StackTrace domain;
  nn::Prob2 p_domain{0.5, 0.5};
};

// Representation learner "cvr_learner", CVR predictor "cvr_predictor" and
// click discriminator "discriminator", the last two both reading h.
class TeacherNetwork : public baselines::CvrModel {
 public:
  TeacherNetwork(const TeacherConfig& config,
                 std::vector<std::uint32_t> cardinalities);

  const TeacherConfig& config() const { return config_; }
  nn::NetworkGraph& graph() { return graph_; }
  const nn::NetworkGraph& graph() const { return graph_; }
  void Initialize(std::uint64_t seed) { graph_.Initialize(seed); }

  // Infer mode leaves p_domain absent and never touches the discriminator.
  TeacherOutput Forward(const data::ImpressionRecord& record, nn::Mode mode,
                        TeacherTrace* trace = nullptr) const;
  // Gradients of the CVR head and the domain head; the domain gradient
  // reaches h through gradient reversal. Returns dL/dh from the domain
  // branch after reversal (useful for inspection).
  std::vector<double> Backward(const data::ImpressionRecord& record,
                               const TeacherTrace& trace,
                               const nn::Prob2& grad_conv,
                               const nn::Prob2& grad_domain);

  double PredictCvr(const data::ImpressionRecord& record) const override;
  // Positive (clicked) class score of the discriminator.
  double DiscriminatorScore(const data::ImpressionRecord& record) const;
  // p_conv with dropout of `rate` applied to h under a fixed mask seed.
  nn::Prob2 DropoutForward(const data::ImpressionRecord& record, double rate,
                           std::uint64_t mask_seed) const;

  void Save(const std::string& path) const;
  static TeacherNetwork Load(const std::string& path);

 private:
  TeacherConfig config_;
  nn::NetworkGraph graph_;
};

struct TeacherTrainingResult {
  baselines::TrainingHistory history;
  std::vector<std::string> warnings;
};

// Loss of one batch: clicked-mean CE(y_conv, p_conv) + domain_weight *
// batch-mean CE(y_click, p_domain), the domain part only when `use_domain`.
// With `accumulate` the gradients are added to the graph.
double TeacherBatchLoss(TeacherNetwork& net,
                        std::span<const data::ImpressionRecord* const> batch,
                        bool use_domain, bool accumulate);

// Batches hold round(B / (1 + ratio)) clicked records and the ratio's share of
// unclicked ones, with the unclicked pool resampled every epoch. Validation
// selects by clicked CVR AUC when `validation` is non-null.
TeacherTrainingResult TrainTeacher(TeacherNetwork& net,
                                   const data::Dataset& d_click,
                                   const data::Dataset& d_unclick,
                                   const data::Dataset* validation,
                                   std::uint64_t seed);

// Click/unclick composition of each batch (index lists into the two pools).
// About round(B / (1 + ratio)) clicked records per batch; the unclicked pool
// is spread so every batch holds n_unclick / n_click times its clicked count,
// within one record.
struct MixedBatch {
  std::vector<std::size_t> clicked;
  std::vector<std::size_t> unclicked;
};
std::vector<MixedBatch> PlanMixedBatches(std::size_t n_click,
                                         std::size_t n_unclick,
                                         std::size_t batch_size, double ratio,
                                         Rng& rng);

struct PseudoLabeledRecord {
  data::ImpressionRecord record;
  nn::Prob2 soft_label{0.5, 0.5};
  std::optional<double> mc_variance;
};

std::vector<PseudoLabeledRecord> GeneratePseudoLabels(
    const TeacherNetwork& net, const data::Dataset& d_unclick);

struct McPseudoLabels {
  std::vector<PseudoLabeledRecord> all;       // every record, with variance
  std::vector<PseudoLabeledRecord> retained;  // lowest-variance fraction
};

// Mean over `n_passes` dropout passes as the label, population variance of
// the positive score as uncertainty. Keeps round(retain_fraction * n)
// lowest-variance records (ties by original order), in original order.
McPseudoLabels McDropoutPseudoLabels(const TeacherNetwork& net,
                                     const data::Dataset& d_unclick,
                                     int n_passes, double dropout_rate,
                                     std::uint64_t seed,
                                     double retain_fraction = 0.8);

// AUC of the discriminator's clicked score against y_click; absent for a
// single-class dataset.
std::optional<double> DiscriminatorAuc(const TeacherNetwork& net,
                                       const data::Dataset& held_out);

// CSV "sample_id,p_pos,p_neg[,mc_variance]"; the variance column is written
// when any record carries one.
void WritePseudoLabels(const std::string& path,
                       const std::vector<PseudoLabeledRecord>& labels);

struct PseudoLabelEntry {
  std::int64_t sample_id = 0;
  nn::Prob2 soft_label{0.5, 0.5};
  std::optional<double> mc_variance;
  friend bool operator==(const PseudoLabelEntry&,
                         const PseudoLabelEntry&) = default;
};
std::vector<PseudoLabelEntry> ReadPseudoLabels(const std::string& path);

// Joins entries with the records of `pool` by sample id. DataError when an
// id is missing from the pool or a label does not sum to 1.
std::vector<PseudoLabeledRecord> AttachPseudoLabels(
    const std::vector<PseudoLabelEntry>& entries, const data::Dataset& pool);

}  // namespace ukd::teacher

#endif  // UKD_TEACHER_TEACHER_H_

#ifndef UKD_STUDENT_STUDENT_H_
#define UKD_STUDENT_STUDENT_H_

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ukd/baselines/model.h"
#include "ukd/baselines/trainer.h"
#include "ukd/data/dataset.h"
#include "ukd/nn/graph.h"
#include "ukd/nn/tower.h"
#include "ukd/teacher/teacher.h"

namespace ukd::student {

enum class Variant { kBase, kUncertainty };

std::string_view VariantName(Variant v);
Variant ParseVariant(std::string_view name);

struct StudentConfig {
  Variant variant = Variant::kUncertainty;
  double alpha = 0.5;    // weight of the unclicked distillation term
  double gamma = 0.2;    // weight of the CTR term
  double lambda = 100.0; // uncertainty scale
  double dropout_rate = 0.2;  // uncertainty variant only
  bool ctr_tower = true;
  std::size_t embedding_dim = 8;
  std::vector<std::size_t> learner_widths{64, 32};
  std::vector<std::size_t> predictor_widths{16};
  double learning_rate = 0.005;
  std::size_t batch_size = 128;
  int epochs = 2;

  void Validate() const;
  std::map<std::string, std::string> ToMeta() const;
  static StudentConfig FromMeta(const std::map<std::string, std::string>& m);
  friend bool operator==(const StudentConfig&, const StudentConfig&) = default;
};

// Seeds of the two dropout masks applied to h_conv for one record.
struct StepSeeds {
  std::array<std::uint64_t, 2> head_seed{0, 0};
};
// Derived from (run seed, step, head id, record index within the batch).
StepSeeds MakeStepSeeds(std::uint64_t run_seed, std::int64_t step,
                        std::size_t record_index);

struct StudentHeads {
  nn::Prob2 conv{0.5, 0.5};
  nn::Prob2 conv_alt{0.5, 0.5};  // uncertainty variant only
  nn::Prob2 click{0.5, 0.5};
};

struct StudentGrads {
  nn::Prob2 conv{0.0, 0.0};
  nn::Prob2 conv_alt{0.0, 0.0};
  nn::Prob2 click{0.0, 0.0};
};

struct StudentTrace {
  std::vector<double> embedding;
  nn::TowerTrace cvr;          // learner + "cvr_predictor" under mask 0
  nn::StackTrace alt;          // "cvr_predictor_alt" under mask 1
  nn::DropoutMask alt_mask;
  nn::TowerTrace ctr;
  StudentHeads heads;
};

struct StudentOutput {
  nn::Prob2 p_conv{0.5, 0.5};
  std::optional<nn::Prob2> p_conv_alt;
  std::optional<nn::Prob2> p_click;
  double cvr_score = 0.5;  // reported CVR: mean of the heads' positive mass
};

// Shared embedding; CVR learner "cvr_learner" with predictor "cvr_predictor"
// (and "cvr_predictor_alt" in the uncertainty variant); CTR tower
// "ctr_learner" / "ctr_predictor" unless disabled.
class StudentNetwork : public baselines::CvrModel {
 public:
  StudentNetwork(const StudentConfig& config,
                 std::vector<std::uint32_t> cardinalities);

  const StudentConfig& config() const { return config_; }
  nn::NetworkGraph& graph() { return graph_; }
  const nn::NetworkGraph& graph() const { return graph_; }
  void Initialize(std::uint64_t seed) { graph_.Initialize(seed); }
  bool dual() const { return config_.variant == Variant::kUncertainty; }

  // Train mode applies two independent dropout masks (uncertainty variant);
  // infer mode applies none.
  StudentOutput Forward(const data::ImpressionRecord& record, nn::Mode mode,
                        const StepSeeds& seeds,
                        StudentTrace* trace = nullptr) const;
  void Backward(const data::ImpressionRecord& record, const StudentTrace& trace,
                const StudentGrads& grads);

  double PredictCvr(const data::ImpressionRecord& record) const override;
  double PredictCtr(const data::ImpressionRecord& record) const;
  // Infer-mode heads.
  StudentHeads InferHeads(const data::ImpressionRecord& record) const;

  void Save(const std::string& path) const;
  static StudentNetwork Load(const std::string& path);

 private:
  StudentConfig config_;
  nn::NetworkGraph graph_;
};

// A batch member: clicked records carry no soft label, pseudo-labeled
// unclicked records carry the teacher distribution.
struct StudentSample {
  const data::ImpressionRecord* record = nullptr;
  std::optional<nn::Prob2> soft_label;
};

struct StudentObjective {
  double value = 0.0;
  double clicked_term = 0.0;
  double unclicked_term = 0.0;  // alpha already applied
  double kl_term = 0.0;
  double ctr_term = 0.0;        // gamma already applied
  std::vector<StudentGrads> grads;
};

// exp(-lambda * kl). DomainError for negative kl or lambda.
double UncertaintyWeight(double kl, double lambda);

// Clicked-mean CE(y_conv, p_conv) + alpha * unclicked-mean CE(p_T, p_conv)
// + gamma * mean CE(y_click, p_click).
StudentObjective BaseDistillObjective(std::span<const StudentSample> batch,
                                      std::span<const StudentHeads> heads,
                                      double alpha, double gamma);

// Clicked-mean [CE(y, p) + CE(y, p')]
// + alpha * unclicked-mean [exp(-lambda KL(p||p')) CE(p_T, p)
//                           + exp(-lambda KL(p'||p)) CE(p_T, p')]
// + unclicked-mean (KL(p||p') + KL(p'||p)) / 2
// + gamma * mean CE(y_click, p_click).
// The exponential weights are constants for the gradient; the KL term is not.
StudentObjective UncertaintyDistillObjective(
    std::span<const StudentSample> batch, std::span<const StudentHeads> heads,
    double alpha, double gamma, double lambda);

// The configured variant's objective.
StudentObjective DistillObjective(const StudentConfig& config,
                                  std::span<const StudentSample> batch,
                                  std::span<const StudentHeads> heads);

// Forward (train mode, seeds from MakeStepSeeds) + objective; with
// `accumulate` the gradients are added to the graph.
StudentObjective StudentBatchLoss(StudentNetwork& net,
                                  std::span<const StudentSample> batch,
                                  std::uint64_t run_seed, std::int64_t step,
                                  bool accumulate);

// Trains on D_click plus the pseudo-labeled unclicked records, shuffled as
// one pool. DataError when a pseudo-labeled id also occurs in D_click.
baselines::TrainingHistory TrainStudent(
    StudentNetwork& net, const data::Dataset& d_click,
    const std::vector<teacher::PseudoLabeledRecord>& pseudo_labeled,
    const baselines::ValidationSet& validation, std::uint64_t seed);

struct NoiseExperimentConfig {
  std::vector<double> k_values{10, 20, 30, 40};
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  // Architecture and optimisation of the two-predictor model. Only the
  // embedding/learner/predictor widths, dropout rate, lr, batch size and
  // epochs are used.
  StudentConfig model;
};

struct NoiseRow {
  double k = 0.0;
  std::uint64_t seed = 0;
  std::optional<double> mean_kl_noisy;  // absent when nothing was flipped
  std::optional<double> mean_kl_clean;
  std::size_t n_noisy = 0;
  std::size_t n_clean = 0;
  friend bool operator==(const NoiseRow&, const NoiseRow&) = default;
};

// One cell: inject k% noise, train a two-head CVR model with loss
// (CE(y, p) + CE(y, p')) / 2, then average KL(p||p') (infer mode) over the
// noisy and the clean training records.
NoiseRow RunNoiseCell(const data::Dataset& d_click, double k,
                      std::uint64_t seed, const StudentConfig& model);

// Rows ordered by (k, seed) in the order given; cells run on up to `jobs`
// threads with identical results for any job count.
std::vector<NoiseRow> NoiseIdentificationExperiment(
    const data::Dataset& d_click, const NoiseExperimentConfig& config,
    int jobs = 1);

std::string NoiseCsvHeader();
std::string NoiseCsvRow(const NoiseRow& row);

}  // namespace ukd::student

#endif  // UKD_STUDENT_STUDENT_H_

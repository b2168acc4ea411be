#ifndef UKD_BASELINES_MODEL_H_
#define UKD_BASELINES_MODEL_H_

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ukd/baselines/objectives.h"
#include "ukd/baselines/trainer.h"
#include "ukd/data/dataset.h"
#include "ukd/nn/graph.h"
#include "ukd/nn/tower.h"

namespace ukd::baselines {

// Anything that scores conversion probability for an impression.
class CvrModel {
 public:
  virtual ~CvrModel() = default;
  virtual double PredictCvr(const data::ImpressionRecord& record) const = 0;
};

std::vector<double> ScoreCvr(const CvrModel& model, const data::Dataset& ds);

enum class ModelKind {
  kSingleCvr,
  kJoint,
  kEsmm,
  kDivision,
  kIpsCfl,
  kJointDomain,
  kCtrReference,  // CTR-only Joint tower; shared propensity/CTCVR scorer
};

std::string_view KindName(ModelKind kind);
// UsageError listing the valid names.
ModelKind ParseKind(std::string_view name);

struct ModelSpec {
  ModelKind kind = ModelKind::kJoint;
  double gamma = 0.2;
  double learning_rate = 0.005;
  std::size_t embedding_dim = 8;
  std::vector<std::size_t> learner_widths{64, 32};
  std::vector<std::size_t> predictor_widths{16};  // hidden, before the 2 logits
  std::vector<std::size_t> discriminator_widths{32};
  std::size_t batch_size = 128;
  int epochs = 2;
  double propensity_clip = 0.01;
  double reversal_scale = 1.0;
  double domain_weight = 1.0;

  // ConfigError on gamma < 0, clip outside (0, 1], empty learner, etc.
  void Validate() const;
  std::map<std::string, std::string> ToMeta() const;
  static ModelSpec FromMeta(const std::map<std::string, std::string>& meta);

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

// Per-record intermediate state for the backward pass.
struct RecordTrace {
  std::vector<double> embedding;
  nn::TowerTrace cvr;
  nn::TowerTrace ctr;
  nn::TowerTrace ctcvr;
  nn::StackTrace domain;
  HeadProbs heads;
};

// One baseline: shared embedding plus the towers its kind needs. Stack names
// are "<tower>_learner" / "<tower>_predictor" for towers cvr, ctr and ctcvr,
// and "discriminator" (joint-domain, fed from the CVR representation through
// gradient reversal).
class BaselineModel : public CvrModel {
 public:
  BaselineModel(const ModelSpec& spec,
                std::vector<std::uint32_t> cardinalities);

  const ModelSpec& spec() const { return spec_; }
  nn::NetworkGraph& graph() { return graph_; }
  const nn::NetworkGraph& graph() const { return graph_; }

  void Initialize(std::uint64_t seed) { graph_.Initialize(seed); }

  bool has_cvr() const { return graph_.HasStack("cvr_learner"); }
  bool has_ctr() const { return graph_.HasStack("ctr_learner"); }

  // `trace` non-null records state for Backward.
  HeadProbs Forward(const data::ImpressionRecord& record,
                    RecordTrace* trace = nullptr) const;
  void Backward(const data::ImpressionRecord& record, const RecordTrace& trace,
                const HeadGrads& grads);

  // The kind's objective on these head outputs.
  ObjectiveValue Objective(RecordBatch batch,
                           std::span<const HeadProbs> heads) const;
  // Forward + objective + backward; gradients accumulate into the graph.
  double AccumulateBatch(RecordBatch batch);
  // Objective value only.
  double BatchLoss(RecordBatch batch) const;

  double PredictCvr(const data::ImpressionRecord& record) const override;
  double PredictCtr(const data::ImpressionRecord& record) const;
  // Positive-class discriminator score; joint-domain only.
  double PredictDomain(const data::ImpressionRecord& record) const;

  void Save(const std::string& path) const;
  static BaselineModel Load(const std::string& path);

 private:
  ModelSpec spec_;
  nn::NetworkGraph graph_;
};

// Validation data for snapshot selection. `ctr_scores` are the reference CTR
// model's scores on `data`, used to form CTCVR scores.
struct ValidationSet {
  const data::Dataset* data = nullptr;
  std::vector<double> ctr_scores;
};

struct TrainedBaseline {
  BaselineModel model;
  TrainingHistory history;
};

// Mini-batch Adam on `train` (its clicked part for single-cvr). Selection
// metric: validation CTCVR AUC, or CTR AUC for the ctr-reference kind.
TrainedBaseline TrainBaseline(const ModelSpec& spec, const data::Dataset& train,
                              const ValidationSet& validation,
                              std::uint64_t seed);

// Backprop of a head's probability gradient through predictor and learner.
// `extra_hidden_grad` (may be empty) is added at the learner output.
std::vector<double> TowerBackward(nn::DenseStack& learner,
                                  nn::DenseStack& predictor,
                                  const nn::TowerTrace& trace,
                                  const nn::Prob2& grad_probs,
                                  std::span<const double> extra_hidden_grad);

}  // namespace ukd::baselines

#endif  // UKD_BASELINES_MODEL_H_

#include "ukd/baselines/model.h"

#include <algorithm>

#include "ukd/common/errors.h"
#include "ukd/common/text.h"
#include "ukd/metrics/metrics.h"
#include "ukd/nn/checkpoint.h"

namespace ukd::baselines {

namespace {

constexpr std::pair<ModelKind, std::string_view> kKindNames[] = {
    {ModelKind::kSingleCvr, "single-cvr"},
    {ModelKind::kJoint, "joint"},
    {ModelKind::kEsmm, "esmm"},
    {ModelKind::kDivision, "division"},
    {ModelKind::kIpsCfl, "ips-cfl"},
    {ModelKind::kJointDomain, "joint-domain"},
    {ModelKind::kCtrReference, "ctr-reference"},
};

bool IsZero(const nn::Prob2& g) { return g[0] == 0.0 && g[1] == 0.0; }

void AddTower(nn::NetworkGraph& graph, const std::string& tower,
              const ModelSpec& spec) {
  std::size_t in = graph.embedding().output_dim();
  auto& learner = graph.AddStack(tower + "_learner", in, spec.learner_widths,
                                 nn::Activation::kRelu);
  std::vector<std::size_t> head = spec.predictor_widths;
  head.push_back(2);
  graph.AddStack(tower + "_predictor", learner.out_dim(), head,
                 nn::Activation::kIdentity);
}

}  // namespace

std::vector<double> ScoreCvr(const CvrModel& model, const data::Dataset& ds) {
  std::vector<double> out;
  out.reserve(ds.size());
  for (const auto& r : ds.records) out.push_back(model.PredictCvr(r));
  return out;
}

std::string_view KindName(ModelKind kind) {
  for (const auto& [k, name] : kKindNames) {
    if (k == kind) return name;
  }
  return "unknown";
}

ModelKind ParseKind(std::string_view name) {
  std::string valid;
  for (const auto& [k, n] : kKindNames) {
    if (n == name) return k;
    if (!valid.empty()) valid += ", ";
    valid += n;
  }
  throw UsageError("unknown baseline '" + std::string(name) +
                   "' (valid: " + valid + ")");
}

void ModelSpec::Validate() const {
  if (!(gamma >= 0.0)) throw ConfigError("gamma must be >= 0");
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be > 0");
  if (!(propensity_clip > 0.0 && propensity_clip <= 1.0)) {
    throw ConfigError("propensity clip must lie in (0, 1]");
  }
  if (!(reversal_scale >= 0.0)) {
    throw ConfigError("gradient reversal scale must be >= 0");
  }
  if (!(domain_weight >= 0.0)) throw ConfigError("domain weight must be >= 0");
  if (embedding_dim == 0) throw ConfigError("embedding dim must be positive");
  if (learner_widths.empty()) {
    throw ConfigError("representation learner needs at least one layer");
  }
  if (batch_size == 0) throw ConfigError("batch size must be positive");
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
}

std::map<std::string, std::string> ModelSpec::ToMeta() const {
  return {
      {"kind", std::string(KindName(kind))},
      {"gamma", FormatExact(gamma)},
      {"learning_rate", FormatExact(learning_rate)},
      {"embedding_dim", std::to_string(embedding_dim)},
      {"learner_widths", nn::FormatWidths(learner_widths)},
      {"predictor_widths", nn::FormatWidths(predictor_widths)},
      {"discriminator_widths", nn::FormatWidths(discriminator_widths)},
      {"batch_size", std::to_string(batch_size)},
      {"epochs", std::to_string(epochs)},
      {"propensity_clip", FormatExact(propensity_clip)},
      {"reversal_scale", FormatExact(reversal_scale)},
      {"domain_weight", FormatExact(domain_weight)},
  };
}

ModelSpec ModelSpec::FromMeta(const std::map<std::string, std::string>& meta) {
  nn::MetaReader m(meta, "model spec");
  ModelSpec s;
  s.kind = ParseKind(m.Str("kind"));
  s.gamma = m.Double("gamma");
  s.learning_rate = m.Double("learning_rate");
  s.embedding_dim = static_cast<std::size_t>(m.Int("embedding_dim"));
  s.learner_widths = m.Widths("learner_widths");
  s.predictor_widths = m.Widths("predictor_widths");
  s.discriminator_widths = m.Widths("discriminator_widths");
  s.batch_size = static_cast<std::size_t>(m.Int("batch_size"));
  s.epochs = static_cast<int>(m.Int("epochs"));
  s.propensity_clip = m.Double("propensity_clip");
  s.reversal_scale = m.Double("reversal_scale");
  s.domain_weight = m.Double("domain_weight");
  return s;
}

BaselineModel::BaselineModel(const ModelSpec& spec,
                             std::vector<std::uint32_t> cardinalities)
    : spec_(spec), graph_(std::move(cardinalities), spec.embedding_dim) {
  spec_.Validate();
  switch (spec_.kind) {
    case ModelKind::kSingleCvr:
      AddTower(graph_, "cvr", spec_);
      break;
    case ModelKind::kDivision:
      AddTower(graph_, "ctcvr", spec_);
      AddTower(graph_, "ctr", spec_);
      break;
    case ModelKind::kCtrReference:
      AddTower(graph_, "ctr", spec_);
      break;
    case ModelKind::kJoint:
    case ModelKind::kEsmm:
    case ModelKind::kIpsCfl:
    case ModelKind::kJointDomain:
      AddTower(graph_, "cvr", spec_);
      AddTower(graph_, "ctr", spec_);
      break;
  }
  if (spec_.kind == ModelKind::kJointDomain) {
    std::vector<std::size_t> widths = spec_.discriminator_widths;
    widths.push_back(2);
    graph_.AddStack("discriminator", graph_.stack("cvr_learner").out_dim(),
                    widths, nn::Activation::kIdentity);
  }
}

HeadProbs BaselineModel::Forward(const data::ImpressionRecord& record,
                                 RecordTrace* trace) const {
  RecordTrace local;
  RecordTrace& t = trace ? *trace : local;
  t.embedding = graph_.embedding().Lookup(record.categories);
  HeadProbs& h = t.heads;
  h = HeadProbs{};
  auto tower = [&](const std::string& name, nn::TowerTrace& tt) {
    return nn::TowerForward(graph_.stack(name + "_learner"),
                            graph_.stack(name + "_predictor"), t.embedding,
                            &tt);
  };
  if (graph_.HasStack("cvr_learner")) h.cvr = tower("cvr", t.cvr);
  if (graph_.HasStack("ctr_learner")) h.ctr = tower("ctr", t.ctr);
  if (graph_.HasStack("ctcvr_learner")) h.ctcvr = tower("ctcvr", t.ctcvr);
  if (graph_.HasStack("discriminator")) {
    h.domain = nn::HeadForward(graph_.stack("discriminator"), t.cvr.hidden,
                               &t.domain);
  }
  return h;
}

std::vector<double> TowerBackward(nn::DenseStack& learner,
                                  nn::DenseStack& predictor,
                                  const nn::TowerTrace& trace,
                                  const nn::Prob2& grad_probs,
                                  std::span<const double> extra_hidden_grad) {
  std::vector<double> g_hidden(trace.hidden.size(), 0.0);
  if (!IsZero(grad_probs)) {
    g_hidden = trace.dropout.Backward(
        nn::HeadBackward(predictor, trace.predictor, trace.probs, grad_probs));
  }
  for (std::size_t i = 0; i < extra_hidden_grad.size(); ++i) {
    g_hidden[i] += extra_hidden_grad[i];
  }
  return learner.Backward(trace.learner, g_hidden);
}

void BaselineModel::Backward(const data::ImpressionRecord& record,
                             const RecordTrace& trace, const HeadGrads& grads) {
  std::vector<double> g_emb;
  std::vector<double> reversed;
  if (graph_.HasStack("discriminator") && !IsZero(grads.domain)) {
    std::vector<double> g_h =
        nn::HeadBackward(graph_.stack("discriminator"), trace.domain,
                         trace.heads.domain, grads.domain);
    reversed = nn::GradientReversal::Backward(g_h, spec_.reversal_scale);
  }
  auto tower = [&](const std::string& name, const nn::TowerTrace& tt,
                   const nn::Prob2& g, std::span<const double> extra) {
    if (!graph_.HasStack(name + "_learner")) return;
    if (IsZero(g) && extra.empty()) return;
    nn::AddInto(g_emb, TowerBackward(graph_.stack(name + "_learner"),
                                     graph_.stack(name + "_predictor"), tt, g,
                                     extra));
  };
  tower("cvr", trace.cvr, grads.cvr, reversed);
  tower("ctr", trace.ctr, grads.ctr, {});
  tower("ctcvr", trace.ctcvr, grads.ctcvr, {});
  if (!g_emb.empty()) graph_.embedding().Backward(record.categories, g_emb);
}

ObjectiveValue BaselineModel::Objective(
    RecordBatch batch, std::span<const HeadProbs> heads) const {
  switch (spec_.kind) {
    case ModelKind::kSingleCvr:
      return SingleCvrObjective(batch, heads);
    case ModelKind::kJoint:
      return JointObjective(batch, heads, spec_.gamma);
    case ModelKind::kEsmm:
      return EsmmObjective(batch, heads, spec_.gamma);
    case ModelKind::kDivision:
      return DivisionObjective(batch, heads, spec_.gamma);
    case ModelKind::kIpsCfl:
      return IpsObjective(batch, heads, spec_.gamma, spec_.propensity_clip);
    case ModelKind::kJointDomain:
      return JointDomainObjective(batch, heads, spec_.gamma,
                                  spec_.domain_weight);
    case ModelKind::kCtrReference:
      return CtrObjective(batch, heads);
  }
  throw UsageError("unhandled model kind");
}

double BaselineModel::AccumulateBatch(RecordBatch batch) {
  std::vector<RecordTrace> traces(batch.size());
  std::vector<HeadProbs> heads(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    heads[i] = Forward(*batch[i], &traces[i]);
  }
  ObjectiveValue obj = Objective(batch, heads);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    Backward(*batch[i], traces[i], obj.grads[i]);
  }
  return obj.value;
}

double BaselineModel::BatchLoss(RecordBatch batch) const {
  std::vector<HeadProbs> heads;
  heads.reserve(batch.size());
  for (const auto* r : batch) heads.push_back(Forward(*r));
  return Objective(batch, heads).value;
}

double BaselineModel::PredictCvr(const data::ImpressionRecord& record) const {
  HeadProbs h = Forward(record);
  switch (spec_.kind) {
    case ModelKind::kCtrReference:
      throw UsageError("ctr-reference model has no CVR head");
    case ModelKind::kDivision:
      return PredictCvrDivision(h.ctcvr[nn::kPositive], h.ctr[nn::kPositive]);
    default:
      return nn::ClipProb(h.cvr[nn::kPositive]);
  }
}

double BaselineModel::PredictCtr(const data::ImpressionRecord& record) const {
  if (!has_ctr()) {
    throw UsageError(std::string(KindName(spec_.kind)) + " has no CTR head");
  }
  return nn::ClipProb(Forward(record).ctr[nn::kPositive]);
}

double BaselineModel::PredictDomain(
    const data::ImpressionRecord& record) const {
  if (!graph_.HasStack("discriminator")) {
    throw UsageError(std::string(KindName(spec_.kind)) +
                     " has no discriminator");
  }
  return Forward(record).domain[nn::kPositive];
}

void BaselineModel::Save(const std::string& path) const {
  nn::CheckpointHeader header;
  header.kind = std::string(KindName(spec_.kind));
  header.meta = spec_.ToMeta();
  header.meta["cardinalities"] =
      nn::FormatCardinalities(graph_.embedding().cardinalities());
  nn::WriteCheckpoint(path, header, graph_);
}

BaselineModel BaselineModel::Load(const std::string& path) {
  nn::CheckpointHeader header = nn::ReadCheckpointHeader(path);
  ModelSpec spec = ModelSpec::FromMeta(header.meta);
  if (header.kind != KindName(spec.kind)) {
    throw ParseError("checkpoint '" + path + "': kind tag disagrees with spec");
  }
  nn::MetaReader m(header.meta, path);
  BaselineModel model(spec, m.Cardinalities("cardinalities"));
  nn::ReadCheckpointParameters(path, model.graph());
  return model;
}

namespace {

class BaselineTask : public TrainingTask {
 public:
  BaselineTask(BaselineModel& model, const data::Dataset& data,
               const ValidationSet& validation)
      : model_(model), data_(data), validation_(validation) {}

  std::vector<std::vector<std::size_t>> PlanEpoch(int, Rng& rng) override {
    return ShuffledBatches(data_.size(), model_.spec().batch_size, rng);
  }

  double RunBatch(std::span<const std::size_t> batch, std::int64_t) override {
    std::vector<const data::ImpressionRecord*> records;
    records.reserve(batch.size());
    for (std::size_t i : batch) records.push_back(&data_.records[i]);
    return model_.AccumulateBatch(records);
  }

  std::optional<double> Validate() override {
    if (!validation_.data || validation_.data->empty()) return std::nullopt;
    const data::Dataset& val = *validation_.data;
    if (model_.spec().kind == ModelKind::kCtrReference) {
      std::vector<double> scores;
      std::vector<int> labels;
      for (const auto& r : val.records) {
        scores.push_back(model_.PredictCtr(r));
        labels.push_back(r.y_click);
      }
      std::vector<double> ones(scores.size(), 1.0);
      return metrics::WeightedAuc(scores, labels, ones);
    }
    if (validation_.ctr_scores.size() != val.size()) return std::nullopt;
    std::vector<double> cvr = ScoreCvr(model_, val);
    return metrics::ComputeCtcvrMetrics(cvr, validation_.ctr_scores, val).auc;
  }

 private:
  BaselineModel& model_;
  const data::Dataset& data_;
  const ValidationSet& validation_;
};

}  // namespace

TrainedBaseline TrainBaseline(const ModelSpec& spec, const data::Dataset& train,
                              const ValidationSet& validation,
                              std::uint64_t seed) {
  BaselineModel model(spec, train.cardinalities);
  model.Initialize(DeriveSeed(seed, "init"));
  data::Dataset clicked_only;
  const data::Dataset* data = &train;
  if (spec.kind == ModelKind::kSingleCvr) {
    clicked_only = data::SplitByClick(train).clicked;
    data = &clicked_only;
  }
  BaselineTask task(model, *data, validation);
  TrainLoopConfig loop;
  loop.epochs = spec.epochs;
  loop.learning_rate = spec.learning_rate;
  loop.seed = DeriveSeed(seed, "train");
  loop.label = std::string(KindName(spec.kind));
  TrainingHistory history = RunTraining(model.graph(), task, loop);
  return TrainedBaseline{std::move(model), std::move(history)};
}

}  // namespace ukd::baselines

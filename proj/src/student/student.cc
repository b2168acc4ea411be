#include "ukd/student/student.h"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "ukd/common/errors.h"
#include "ukd/common/parallel.h"
#include "ukd/common/text.h"
#include "ukd/metrics/metrics.h"
#include "ukd/nn/checkpoint.h"

namespace ukd::student {

namespace {

using nn::Prob2;

bool IsZero(const Prob2& g) { return g[0] == 0.0 && g[1] == 0.0; }

void AddScaled(Prob2& acc, const Prob2& g, double s) {
  acc[0] += s * g[0];
  acc[1] += s * g[1];
}

void CheckBatch(std::span<const StudentSample> batch,
                std::span<const StudentHeads> heads) {
  if (batch.size() != heads.size()) {
    throw UsageError("student objective: batch and head outputs differ");
  }
  for (const auto& s : batch) {
    if (!s.record->clicked() && !s.soft_label) {
      throw UsageError("student objective: unclicked record " +
                       std::to_string(s.record->sample_id) +
                       " has no pseudo label");
    }
  }
}

struct Counts {
  std::size_t clicked = 0;
  std::size_t unclicked = 0;
};

Counts CountMembers(std::span<const StudentSample> batch) {
  Counts c;
  for (const auto& s : batch) (s.soft_label ? c.unclicked : c.clicked)++;
  return c;
}

double InvOrZero(std::size_t n) {
  return n ? 1.0 / static_cast<double>(n) : 0.0;
}

double AddCtrTerm(std::span<const StudentSample> batch,
                  std::span<const StudentHeads> heads, double gamma,
                  std::vector<StudentGrads>& grads) {
  const double w = gamma * InvOrZero(batch.size());
  if (w == 0.0) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    Prob2 t = nn::HardTarget(batch[i].record->y_click);
    sum += nn::CrossEntropy(heads[i].click, t);
    AddScaled(grads[i].click, nn::CrossEntropyGrad(heads[i].click, t), w);
  }
  return w * sum;
}

}  // namespace

std::string_view VariantName(Variant v) {
  return v == Variant::kBase ? "base" : "uncertainty";
}

Variant ParseVariant(std::string_view name) {
  if (name == "base") return Variant::kBase;
  if (name == "uncertainty") return Variant::kUncertainty;
  throw ConfigError("unknown student variant '" + std::string(name) +
                    "' (valid: base, uncertainty)");
}

void StudentConfig::Validate() const {
  if (!(alpha >= 0.0)) throw ConfigError("alpha must be >= 0");
  if (!(gamma >= 0.0)) throw ConfigError("gamma must be >= 0");
  if (!(lambda >= 0.0)) throw ConfigError("lambda must be >= 0");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw ConfigError("dropout rate must lie in [0, 1)");
  }
  if (embedding_dim == 0) throw ConfigError("student embedding dim must be > 0");
  if (learner_widths.empty()) {
    throw ConfigError("student learner needs at least one layer");
  }
  if (!(learning_rate > 0.0)) throw ConfigError("student lr must be > 0");
  if (batch_size == 0) throw ConfigError("student batch size must be > 0");
  if (epochs < 0) throw ConfigError("student epochs must be >= 0");
}

std::map<std::string, std::string> StudentConfig::ToMeta() const {
  return {
      {"variant", std::string(VariantName(variant))},
      {"alpha", FormatExact(alpha)},
      {"gamma", FormatExact(gamma)},
      {"lambda", FormatExact(lambda)},
      {"dropout_rate", FormatExact(dropout_rate)},
      {"ctr_tower", ctr_tower ? "1" : "0"},
      {"embedding_dim", std::to_string(embedding_dim)},
      {"learner_widths", nn::FormatWidths(learner_widths)},
      {"predictor_widths", nn::FormatWidths(predictor_widths)},
      {"learning_rate", FormatExact(learning_rate)},
      {"batch_size", std::to_string(batch_size)},
      {"epochs", std::to_string(epochs)},
  };
}

StudentConfig StudentConfig::FromMeta(
    const std::map<std::string, std::string>& meta) {
  nn::MetaReader m(meta, "student config");
  StudentConfig c;
  c.variant = ParseVariant(m.Str("variant"));
  c.alpha = m.Double("alpha");
  c.gamma = m.Double("gamma");
  c.lambda = m.Double("lambda");
  c.dropout_rate = m.Double("dropout_rate");
  c.ctr_tower = m.Int("ctr_tower") != 0;
  c.embedding_dim = static_cast<std::size_t>(m.Int("embedding_dim"));
  c.learner_widths = m.Widths("learner_widths");
  c.predictor_widths = m.Widths("predictor_widths");
  c.learning_rate = m.Double("learning_rate");
  c.batch_size = static_cast<std::size_t>(m.Int("batch_size"));
  c.epochs = static_cast<int>(m.Int("epochs"));
  return c;
}

StepSeeds MakeStepSeeds(std::uint64_t run_seed, std::int64_t step,
                        std::size_t record_index) {
  StepSeeds s;
  for (std::uint64_t head = 0; head < 2; ++head) {
    s.head_seed[head] = DeriveSeed(DeriveSeed(run_seed, "dropout"),
                                   static_cast<std::uint64_t>(step), head,
                                   record_index);
  }
  return s;
}

StudentNetwork::StudentNetwork(const StudentConfig& config,
                               std::vector<std::uint32_t> cardinalities)
    : config_(config), graph_(std::move(cardinalities), config.embedding_dim) {
  config_.Validate();
  std::size_t in = graph_.embedding().output_dim();
  std::vector<std::size_t> head = config_.predictor_widths;
  head.push_back(2);
  std::size_t h = graph_.AddStack("cvr_learner", in, config_.learner_widths,
                                  nn::Activation::kRelu)
                      .out_dim();
  graph_.AddStack("cvr_predictor", h, head, nn::Activation::kIdentity);
  if (dual()) {
    graph_.AddStack("cvr_predictor_alt", h, head, nn::Activation::kIdentity);
  }
  if (config_.ctr_tower) {
    std::size_t hc = graph_.AddStack("ctr_learner", in, config_.learner_widths,
                                     nn::Activation::kRelu)
                         .out_dim();
    graph_.AddStack("ctr_predictor", hc, head, nn::Activation::kIdentity);
  }
}

StudentOutput StudentNetwork::Forward(const data::ImpressionRecord& record,
                                      nn::Mode mode, const StepSeeds& seeds,
                                      StudentTrace* trace) const {
  StudentTrace local;
  StudentTrace& t = trace ? *trace : local;
  t.embedding = graph_.embedding().Lookup(record.categories);
  const nn::DenseStack& learner = graph_.stack("cvr_learner");
  const bool masked = mode == nn::Mode::kTrain && dual();
  const double rate = masked ? config_.dropout_rate : 0.0;
  nn::DropoutMask mask0 =
      masked ? nn::DropoutMask(learner.out_dim(), rate, seeds.head_seed[0])
             : nn::DropoutMask::Identity(learner.out_dim());
  StudentOutput out;
  StudentHeads& h = t.heads;
  h = StudentHeads{};
  h.conv = nn::TowerForward(learner, graph_.stack("cvr_predictor"),
                            t.embedding, &t.cvr, &mask0);
  out.p_conv = h.conv;
  out.cvr_score = h.conv[nn::kPositive];
  if (dual()) {
    t.alt_mask =
        masked ? nn::DropoutMask(learner.out_dim(), rate, seeds.head_seed[1])
               : nn::DropoutMask::Identity(learner.out_dim());
    std::vector<double> alt_in = t.alt_mask.Apply(t.cvr.hidden);
    h.conv_alt =
        nn::HeadForward(graph_.stack("cvr_predictor_alt"), alt_in, &t.alt);
    out.p_conv_alt = h.conv_alt;
    out.cvr_score =
        0.5 * (h.conv[nn::kPositive] + h.conv_alt[nn::kPositive]);
  }
  if (config_.ctr_tower) {
    h.click = nn::TowerForward(graph_.stack("ctr_learner"),
                               graph_.stack("ctr_predictor"), t.embedding,
                               &t.ctr);
    out.p_click = h.click;
  }
  return out;
}

void StudentNetwork::Backward(const data::ImpressionRecord& record,
                              const StudentTrace& trace,
                              const StudentGrads& grads) {
  std::vector<double> g_emb;
  std::vector<double> alt_grad;
  if (dual() && !IsZero(grads.conv_alt)) {
    alt_grad = trace.alt_mask.Backward(
        nn::HeadBackward(graph_.stack("cvr_predictor_alt"), trace.alt,
                         trace.heads.conv_alt, grads.conv_alt));
  }
  if (!IsZero(grads.conv) || !alt_grad.empty()) {
    g_emb = baselines::TowerBackward(graph_.stack("cvr_learner"),
                                     graph_.stack("cvr_predictor"), trace.cvr,
                                     grads.conv, alt_grad);
  }
  if (config_.ctr_tower && !IsZero(grads.click)) {
    nn::AddInto(g_emb, baselines::TowerBackward(
                           graph_.stack("ctr_learner"),
                           graph_.stack("ctr_predictor"), trace.ctr,
                           grads.click, {}));
  }
  if (!g_emb.empty()) graph_.embedding().Backward(record.categories, g_emb);
}

StudentHeads StudentNetwork::InferHeads(
    const data::ImpressionRecord& record) const {
  StudentTrace t;
  Forward(record, nn::Mode::kInfer, StepSeeds{}, &t);
  return t.heads;
}

double StudentNetwork::PredictCvr(const data::ImpressionRecord& record) const {
  return nn::ClipProb(
      Forward(record, nn::Mode::kInfer, StepSeeds{}).cvr_score);
}

double StudentNetwork::PredictCtr(const data::ImpressionRecord& record) const {
  if (!config_.ctr_tower) throw UsageError("student has no CTR tower");
  return nn::ClipProb(
      (*Forward(record, nn::Mode::kInfer, StepSeeds{}).p_click)[nn::kPositive]);
}

void StudentNetwork::Save(const std::string& path) const {
  nn::CheckpointHeader header;
  header.kind = dual() ? "ukd" : "ukd-base";
  header.meta = config_.ToMeta();
  header.meta["cardinalities"] =
      nn::FormatCardinalities(graph_.embedding().cardinalities());
  nn::WriteCheckpoint(path, header, graph_);
}

StudentNetwork StudentNetwork::Load(const std::string& path) {
  nn::CheckpointHeader header = nn::ReadCheckpointHeader(path);
  if (header.kind != "ukd" && header.kind != "ukd-base") {
    throw ParseError("checkpoint '" + path + "' is not a student (kind " +
                     header.kind + ")");
  }
  nn::MetaReader m(header.meta, path);
  StudentNetwork net(StudentConfig::FromMeta(header.meta),
                     m.Cardinalities("cardinalities"));
  nn::ReadCheckpointParameters(path, net.graph());
  return net;
}

double UncertaintyWeight(double kl, double lambda) {
  if (!(kl >= 0.0)) throw DomainError("uncertainty weight needs kl >= 0");
  if (!(lambda >= 0.0)) throw DomainError("uncertainty weight needs lambda >= 0");
  return std::exp(-lambda * kl);
}

StudentObjective BaseDistillObjective(std::span<const StudentSample> batch,
                                      std::span<const StudentHeads> heads,
                                      double alpha, double gamma) {
  CheckBatch(batch, heads);
  StudentObjective out;
  out.grads.resize(batch.size());
  Counts c = CountMembers(batch);
  const double wc = InvOrZero(c.clicked);
  const double wu = alpha * InvOrZero(c.unclicked);
  double click_sum = 0.0, unclick_sum = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& s = batch[i];
    if (s.soft_label) {
      unclick_sum += nn::CrossEntropy(heads[i].conv, *s.soft_label);
      AddScaled(out.grads[i].conv,
                nn::CrossEntropyGrad(heads[i].conv, *s.soft_label), wu);
    } else {
      Prob2 t = nn::HardTarget(s.record->conversion());
      click_sum += nn::CrossEntropy(heads[i].conv, t);
      AddScaled(out.grads[i].conv, nn::CrossEntropyGrad(heads[i].conv, t), wc);
    }
  }
  out.clicked_term = wc * click_sum;
  out.unclicked_term = wu * unclick_sum;
  out.ctr_term = AddCtrTerm(batch, heads, gamma, out.grads);
  out.value = out.clicked_term + out.unclicked_term + out.ctr_term;
  return out;
}

StudentObjective UncertaintyDistillObjective(
    std::span<const StudentSample> batch, std::span<const StudentHeads> heads,
    double alpha, double gamma, double lambda) {
  CheckBatch(batch, heads);
  StudentObjective out;
  out.grads.resize(batch.size());
  Counts c = CountMembers(batch);
  const double wc = InvOrZero(c.clicked);
  const double wu = alpha * InvOrZero(c.unclicked);
  const double wk = 0.5 * InvOrZero(c.unclicked);
  double click_sum = 0.0, unclick_sum = 0.0, kl_sum = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& s = batch[i];
    const Prob2& p = heads[i].conv;
    const Prob2& q = heads[i].conv_alt;
    StudentGrads& g = out.grads[i];
    if (!s.soft_label) {
      Prob2 t = nn::HardTarget(s.record->conversion());
      click_sum += nn::CrossEntropy(p, t) + nn::CrossEntropy(q, t);
      AddScaled(g.conv, nn::CrossEntropyGrad(p, t), wc);
      AddScaled(g.conv_alt, nn::CrossEntropyGrad(q, t), wc);
      continue;
    }
    const Prob2& t = *s.soft_label;
    const double kl_pq = nn::KlDivergence(p, q);
    const double kl_qp = nn::KlDivergence(q, p);
    const double w_p = UncertaintyWeight(kl_pq, lambda);
    const double w_q = UncertaintyWeight(kl_qp, lambda);
    unclick_sum += w_p * nn::CrossEntropy(p, t) + w_q * nn::CrossEntropy(q, t);
    AddScaled(g.conv, nn::CrossEntropyGrad(p, t), wu * w_p);
    AddScaled(g.conv_alt, nn::CrossEntropyGrad(q, t), wu * w_q);
    kl_sum += kl_pq + kl_qp;
    nn::KlGradient d_pq = nn::KlDivergenceGrad(p, q);
    nn::KlGradient d_qp = nn::KlDivergenceGrad(q, p);
    AddScaled(g.conv, d_pq.d_p, wk);
    AddScaled(g.conv_alt, d_pq.d_q, wk);
    AddScaled(g.conv_alt, d_qp.d_p, wk);
    AddScaled(g.conv, d_qp.d_q, wk);
  }
  out.clicked_term = wc * click_sum;
  out.unclicked_term = wu * unclick_sum;
  out.kl_term = wk * kl_sum;
  out.ctr_term = AddCtrTerm(batch, heads, gamma, out.grads);
  out.value = out.clicked_term + out.unclicked_term + out.kl_term + out.ctr_term;
  return out;
}

StudentObjective DistillObjective(const StudentConfig& config,
                                  std::span<const StudentSample> batch,
                                  std::span<const StudentHeads> heads) {
  if (config.variant == Variant::kBase) {
    return BaseDistillObjective(batch, heads, config.alpha, config.gamma);
  }
  return UncertaintyDistillObjective(batch, heads, config.alpha, config.gamma,
                                     config.lambda);
}

StudentObjective StudentBatchLoss(StudentNetwork& net,
                                  std::span<const StudentSample> batch,
                                  std::uint64_t run_seed, std::int64_t step,
                                  bool accumulate) {
  std::vector<StudentTrace> traces(batch.size());
  std::vector<StudentHeads> heads(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    net.Forward(*batch[i].record, nn::Mode::kTrain,
                MakeStepSeeds(run_seed, step, i), &traces[i]);
    heads[i] = traces[i].heads;
  }
  StudentObjective obj = DistillObjective(net.config(), batch, heads);
  if (accumulate) {
    for (std::size_t i = 0; i < batch.size(); ++i) {
      net.Backward(*batch[i].record, traces[i], obj.grads[i]);
    }
  }
  return obj;
}

namespace {

std::optional<double> ValidationCtcvrAuc(const baselines::CvrModel& model,
                                         const baselines::ValidationSet& v) {
  if (!v.data || v.data->empty() || v.ctr_scores.size() != v.data->size()) {
    return std::nullopt;
  }
  std::vector<double> cvr = baselines::ScoreCvr(model, *v.data);
  return metrics::ComputeCtcvrMetrics(cvr, v.ctr_scores, *v.data).auc;
}

class StudentTask : public baselines::TrainingTask {
 public:
  StudentTask(StudentNetwork& net, std::vector<StudentSample> pool,
              const baselines::ValidationSet& validation, std::uint64_t seed)
      : net_(net),
        pool_(std::move(pool)),
        validation_(validation),
        seed_(seed) {}

  std::vector<std::vector<std::size_t>> PlanEpoch(int, Rng& rng) override {
    return baselines::ShuffledBatches(pool_.size(), net_.config().batch_size,
                                      rng);
  }

  double RunBatch(std::span<const std::size_t> batch,
                  std::int64_t step) override {
    std::vector<StudentSample> members;
    members.reserve(batch.size());
    for (std::size_t i : batch) members.push_back(pool_[i]);
    return StudentBatchLoss(net_, members, seed_, step, true).value;
  }

  std::optional<double> Validate() override {
    return ValidationCtcvrAuc(net_, validation_);
  }

 private:
  StudentNetwork& net_;
  std::vector<StudentSample> pool_;
  const baselines::ValidationSet& validation_;
  std::uint64_t seed_;
};

}  // namespace

baselines::TrainingHistory TrainStudent(
    StudentNetwork& net, const data::Dataset& d_click,
    const std::vector<teacher::PseudoLabeledRecord>& pseudo_labeled,
    const baselines::ValidationSet& validation, std::uint64_t seed) {
  std::unordered_set<std::int64_t> click_ids;
  std::vector<StudentSample> pool;
  pool.reserve(d_click.size() + pseudo_labeled.size());
  for (const auto& r : d_click.records) {
    if (!r.clicked()) throw DataError("student: D_click holds an unclicked record");
    click_ids.insert(r.sample_id);
    pool.push_back({&r, std::nullopt});
  }
  for (const auto& p : pseudo_labeled) {
    if (click_ids.count(p.record.sample_id)) {
      throw DataError("pseudo-labeled sample id " +
                      std::to_string(p.record.sample_id) +
                      " also occurs in D_click");
    }
    if (p.record.clicked()) {
      throw DataError("pseudo-labeled record " +
                      std::to_string(p.record.sample_id) + " is clicked");
    }
    pool.push_back({&p.record, p.soft_label});
  }
  StudentTask task(net, std::move(pool), validation,
                   DeriveSeed(seed, "student-dropout"));
  baselines::TrainLoopConfig loop;
  loop.epochs = net.config().epochs;
  loop.learning_rate = net.config().learning_rate;
  loop.seed = DeriveSeed(seed, "student-train");
  loop.label = net.dual() ? "ukd" : "ukd-base";
  return baselines::RunTraining(net.graph(), task, loop);
}

namespace {

class NoiseTask : public baselines::TrainingTask {
 public:
  NoiseTask(StudentNetwork& net, const data::Dataset& data, std::uint64_t seed)
      : net_(net), data_(data), seed_(seed) {}

  std::vector<std::vector<std::size_t>> PlanEpoch(int, Rng& rng) override {
    return baselines::ShuffledBatches(data_.size(), net_.config().batch_size,
                                      rng);
  }

  // Mean over the batch of (CE(y, p) + CE(y, p')) / 2.
  double RunBatch(std::span<const std::size_t> batch,
                  std::int64_t step) override {
    const double w = 0.5 / static_cast<double>(batch.size());
    double sum = 0.0;
    StudentTrace trace;
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const auto& r = data_.records[batch[i]];
      net_.Forward(r, nn::Mode::kTrain, MakeStepSeeds(seed_, step, i), &trace);
      Prob2 t = nn::HardTarget(r.conversion());
      sum += nn::CrossEntropy(trace.heads.conv, t) +
             nn::CrossEntropy(trace.heads.conv_alt, t);
      StudentGrads g;
      AddScaled(g.conv, nn::CrossEntropyGrad(trace.heads.conv, t), w);
      AddScaled(g.conv_alt, nn::CrossEntropyGrad(trace.heads.conv_alt, t), w);
      net_.Backward(r, trace, g);
    }
    return w * sum;
  }

 private:
  StudentNetwork& net_;
  const data::Dataset& data_;
  std::uint64_t seed_;
};

}  // namespace

NoiseRow RunNoiseCell(const data::Dataset& d_click, double k,
                      std::uint64_t seed, const StudentConfig& model) {
  StudentConfig cfg = model;
  cfg.variant = Variant::kUncertainty;
  cfg.ctr_tower = false;
  data::NoisyDataset noisy =
      data::InjectLabelNoise(d_click, k, DeriveSeed(seed, "noise"));
  StudentNetwork net(cfg, d_click.cardinalities);
  net.Initialize(DeriveSeed(seed, "noise-init"));
  NoiseTask task(net, noisy.data, DeriveSeed(seed, "noise-dropout"));
  baselines::TrainLoopConfig loop;
  loop.epochs = cfg.epochs;
  loop.learning_rate = cfg.learning_rate;
  loop.seed = DeriveSeed(seed, "noise-train");
  loop.label = "noise-experiment";
  baselines::RunTraining(net.graph(), task, loop);

  NoiseRow row;
  row.k = k;
  row.seed = seed;
  double noisy_sum = 0.0, clean_sum = 0.0;
  for (std::size_t i = 0; i < noisy.data.size(); ++i) {
    StudentHeads h = net.InferHeads(noisy.data.records[i]);
    double kl = nn::KlDivergence(h.conv, h.conv_alt);
    if (noisy.noise_mask[i]) {
      noisy_sum += kl;
      ++row.n_noisy;
    } else {
      clean_sum += kl;
      ++row.n_clean;
    }
  }
  if (row.n_noisy) row.mean_kl_noisy = noisy_sum / static_cast<double>(row.n_noisy);
  if (row.n_clean) row.mean_kl_clean = clean_sum / static_cast<double>(row.n_clean);
  return row;
}

std::vector<NoiseRow> NoiseIdentificationExperiment(
    const data::Dataset& d_click, const NoiseExperimentConfig& config,
    int jobs) {
  for (double k : config.k_values) {
    if (!(k >= 0.0 && k <= 100.0)) {
      throw ConfigError("noise k values must lie in [0, 100]");
    }
  }
  config.model.Validate();
  struct Cell {
    double k;
    std::uint64_t seed;
  };
  std::vector<Cell> cells;
  for (double k : config.k_values) {
    for (std::uint64_t s : config.seeds) cells.push_back({k, s});
  }
  std::vector<NoiseRow> rows(cells.size());
  ParallelFor(cells.size(), jobs, [&](std::size_t i) {
    rows[i] = RunNoiseCell(d_click, cells[i].k, cells[i].seed, config.model);
  });
  return rows;
}

std::string NoiseCsvHeader() { return "k,seed,mean_kl_noisy,mean_kl_clean"; }

std::string NoiseCsvRow(const NoiseRow& row) {
  auto opt = [](const std::optional<double>& v) {
    return v ? FormatExact(*v) : std::string("absent");
  };
  return FormatExact(row.k) + "," + std::to_string(row.seed) + "," +
         opt(row.mean_kl_noisy) + "," + opt(row.mean_kl_clean);
}

}  // namespace ukd::student

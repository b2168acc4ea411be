#include "ukd/teacher/teacher.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <unordered_map>

#include "ukd/common/errors.h"
#include "ukd/common/text.h"
#include "ukd/metrics/metrics.h"
#include "ukd/nn/checkpoint.h"

namespace ukd::teacher {

namespace {

using nn::Prob2;

bool IsZero(const Prob2& g) { return g[0] == 0.0 && g[1] == 0.0; }

}  // namespace

void TeacherConfig::Validate() const {
  if (embedding_dim == 0) throw ConfigError("teacher embedding dim must be > 0");
  if (learner_widths.empty()) {
    throw ConfigError("teacher learner needs at least one layer");
  }
  if (!(learning_rate > 0.0)) throw ConfigError("teacher lr must be > 0");
  if (batch_size == 0) throw ConfigError("teacher batch size must be > 0");
  if (epochs < 0) throw ConfigError("teacher epochs must be >= 0");
  if (!(domain_weight >= 0.0)) throw ConfigError("domain weight must be >= 0");
  if (!(reversal_scale >= 0.0)) throw ConfigError("reversal scale must be >= 0");
  if (!(unclick_ratio >= 0.0)) throw ConfigError("unclick ratio must be >= 0");
}

std::map<std::string, std::string> TeacherConfig::ToMeta() const {
  return {
      {"embedding_dim", std::to_string(embedding_dim)},
      {"learner_widths", nn::FormatWidths(learner_widths)},
      {"predictor_widths", nn::FormatWidths(predictor_widths)},
      {"discriminator_widths", nn::FormatWidths(discriminator_widths)},
      {"learning_rate", FormatExact(learning_rate)},
      {"batch_size", std::to_string(batch_size)},
      {"epochs", std::to_string(epochs)},
      {"domain_weight", FormatExact(domain_weight)},
      {"reversal_scale", FormatExact(reversal_scale)},
      {"unclick_ratio", FormatExact(unclick_ratio)},
      {"adversarial", adversarial ? "1" : "0"},
  };
}

TeacherConfig TeacherConfig::FromMeta(
    const std::map<std::string, std::string>& meta) {
  nn::MetaReader m(meta, "teacher config");
  TeacherConfig c;
  c.embedding_dim = static_cast<std::size_t>(m.Int("embedding_dim"));
  c.learner_widths = m.Widths("learner_widths");
  c.predictor_widths = m.Widths("predictor_widths");
  c.discriminator_widths = m.Widths("discriminator_widths");
  c.learning_rate = m.Double("learning_rate");
  c.batch_size = static_cast<std::size_t>(m.Int("batch_size"));
  c.epochs = static_cast<int>(m.Int("epochs"));
  c.domain_weight = m.Double("domain_weight");
  c.reversal_scale = m.Double("reversal_scale");
  c.unclick_ratio = m.Double("unclick_ratio");
  c.adversarial = m.Int("adversarial") != 0;
  return c;
}

TeacherNetwork::TeacherNetwork(const TeacherConfig& config,
                               std::vector<std::uint32_t> cardinalities)
    : config_(config), graph_(std::move(cardinalities), config.embedding_dim) {
  config_.Validate();
  std::size_t in = graph_.embedding().output_dim();
  std::size_t h = graph_.AddStack("cvr_learner", in, config_.learner_widths,
                                  nn::Activation::kRelu)
                      .out_dim();
  std::vector<std::size_t> head = config_.predictor_widths;
  head.push_back(2);
  graph_.AddStack("cvr_predictor", h, head, nn::Activation::kIdentity);
  std::vector<std::size_t> disc = config_.discriminator_widths;
  disc.push_back(2);
  graph_.AddStack("discriminator", h, disc, nn::Activation::kIdentity);
}

TeacherOutput TeacherNetwork::Forward(const data::ImpressionRecord& record,
                                      nn::Mode mode,
                                      TeacherTrace* trace) const {
  TeacherTrace local;
  TeacherTrace& t = trace ? *trace : local;
  t.embedding = graph_.embedding().Lookup(record.categories);
  TeacherOutput out;
  out.p_conv = nn::TowerForward(graph_.stack("cvr_learner"),
                                graph_.stack("cvr_predictor"), t.embedding,
                                &t.cvr);
  out.hidden = t.cvr.hidden;
  if (mode == nn::Mode::kTrain) {
    t.p_domain =
        nn::HeadForward(graph_.stack("discriminator"), t.cvr.hidden, &t.domain);
    out.p_domain = t.p_domain;
  }
  return out;
}

std::vector<double> TeacherNetwork::Backward(
    const data::ImpressionRecord& record, const TeacherTrace& trace,
    const Prob2& grad_conv, const Prob2& grad_domain) {
  std::vector<double> reversed;
  if (!IsZero(grad_domain)) {
    std::vector<double> g_h = nn::HeadBackward(
        graph_.stack("discriminator"), trace.domain, trace.p_domain,
        grad_domain);
    reversed = nn::GradientReversal::Backward(g_h, config_.reversal_scale);
  }
  if (IsZero(grad_conv) && reversed.empty()) return reversed;
  std::vector<double> g_emb = baselines::TowerBackward(
      graph_.stack("cvr_learner"), graph_.stack("cvr_predictor"), trace.cvr,
      grad_conv, reversed);
  graph_.embedding().Backward(record.categories, g_emb);
  return reversed;
}

double TeacherNetwork::PredictCvr(const data::ImpressionRecord& record) const {
  return nn::ClipProb(Forward(record, nn::Mode::kInfer).p_conv[nn::kPositive]);
}

double TeacherNetwork::DiscriminatorScore(
    const data::ImpressionRecord& record) const {
  return (*Forward(record, nn::Mode::kTrain).p_domain)[nn::kPositive];
}

Prob2 TeacherNetwork::DropoutForward(const data::ImpressionRecord& record,
                                     double rate,
                                     std::uint64_t mask_seed) const {
  std::vector<double> emb = graph_.embedding().Lookup(record.categories);
  const nn::DenseStack& learner = graph_.stack("cvr_learner");
  nn::DropoutMask mask(learner.out_dim(), rate, mask_seed);
  return nn::TowerForward(learner, graph_.stack("cvr_predictor"), emb, nullptr,
                          &mask);
}

void TeacherNetwork::Save(const std::string& path) const {
  nn::CheckpointHeader header;
  header.kind = "teacher";
  header.meta = config_.ToMeta();
  header.meta["cardinalities"] =
      nn::FormatCardinalities(graph_.embedding().cardinalities());
  nn::WriteCheckpoint(path, header, graph_);
}

TeacherNetwork TeacherNetwork::Load(const std::string& path) {
  nn::CheckpointHeader header = nn::ReadCheckpointHeader(path);
  if (header.kind != "teacher") {
    throw ParseError("checkpoint '" + path + "' is not a teacher (kind " +
                     header.kind + ")");
  }
  nn::MetaReader m(header.meta, path);
  TeacherNetwork net(TeacherConfig::FromMeta(header.meta),
                     m.Cardinalities("cardinalities"));
  nn::ReadCheckpointParameters(path, net.graph());
  return net;
}

double TeacherBatchLoss(TeacherNetwork& net,
                        std::span<const data::ImpressionRecord* const> batch,
                        bool use_domain, bool accumulate) {
  if (batch.empty()) return 0.0;
  std::size_t n_click = 0;
  for (const auto* r : batch) n_click += r->clicked() ? 1 : 0;
  const double w_conv = n_click ? 1.0 / static_cast<double>(n_click) : 0.0;
  const double w_dom =
      net.config().domain_weight / static_cast<double>(batch.size());
  const nn::Mode mode = use_domain || accumulate ? nn::Mode::kTrain
                                                 : nn::Mode::kInfer;
  double conv_sum = 0.0;
  double dom_sum = 0.0;
  TeacherTrace trace;
  for (const auto* r : batch) {
    TeacherOutput out = net.Forward(*r, mode, &trace);
    Prob2 g_conv{0.0, 0.0};
    Prob2 g_dom{0.0, 0.0};
    if (r->clicked()) {
      Prob2 t = nn::HardTarget(r->conversion());
      conv_sum += nn::CrossEntropy(out.p_conv, t);
      g_conv = nn::CrossEntropyGrad(out.p_conv, t);
      g_conv = {g_conv[0] * w_conv, g_conv[1] * w_conv};
    }
    if (use_domain) {
      Prob2 t = nn::HardTarget(r->y_click);
      dom_sum += nn::CrossEntropy(*out.p_domain, t);
      g_dom = nn::CrossEntropyGrad(*out.p_domain, t);
      g_dom = {g_dom[0] * w_dom, g_dom[1] * w_dom};
    }
    if (accumulate) net.Backward(*r, trace, g_conv, g_dom);
  }
  return w_conv * conv_sum + w_dom * dom_sum;
}

std::vector<MixedBatch> PlanMixedBatches(std::size_t n_click,
                                         std::size_t n_unclick,
                                         std::size_t batch_size, double ratio,
                                         Rng& rng) {
  if (batch_size == 0) throw ConfigError("batch size must be positive");
  if (n_click == 0) return {};
  auto shuffled = [&rng](std::size_t n) {
    std::vector<std::size_t> v(n);
    std::iota(v.begin(), v.end(), std::size_t{0});
    for (std::size_t i = n; i > 1; --i) {
      std::swap(v[i - 1], v[static_cast<std::size_t>(rng() % i)]);
    }
    return v;
  };
  std::vector<std::size_t> c = shuffled(n_click);
  std::vector<std::size_t> u = shuffled(n_unclick);
  double per = std::round(static_cast<double>(batch_size) / (1.0 + ratio));
  std::size_t c_per = std::clamp<std::size_t>(static_cast<std::size_t>(per), 1,
                                              batch_size);
  std::size_t k = (n_click + c_per - 1) / c_per;
  // Unclicked boundaries follow the cumulative clicked count, rounded, so
  // each batch is within one record of the pools' ratio.
  auto unclick_end = [&](std::size_t clicked_so_far) {
    return (n_unclick * clicked_so_far + n_click / 2) / n_click;
  };
  std::vector<MixedBatch> batches(k);
  for (std::size_t i = 0; i < k; ++i) {
    std::size_t c_lo = i * n_click / k, c_hi = (i + 1) * n_click / k;
    batches[i].clicked.assign(c.begin() + c_lo, c.begin() + c_hi);
    batches[i].unclicked.assign(u.begin() + unclick_end(c_lo),
                                u.begin() + unclick_end(c_hi));
  }
  return batches;
}

namespace {

class TeacherTask : public baselines::TrainingTask {
 public:
  TeacherTask(TeacherNetwork& net, const data::Dataset& d_click,
              const data::Dataset& d_unclick, const data::Dataset* validation,
              std::uint64_t seed, std::vector<std::string>& warnings)
      : net_(net),
        d_click_(d_click),
        d_unclick_(d_unclick),
        validation_(validation),
        seed_(seed),
        warnings_(warnings) {
    use_domain_ = net.config().adversarial && !d_unclick.empty();
    if (net.config().adversarial && d_unclick.empty()) {
      warnings_.push_back(
          "no unclicked records: domain term skipped, teacher trains on "
          "clicked records only");
    }
  }

  std::vector<std::vector<std::size_t>> PlanEpoch(int epoch,
                                                  Rng& rng) override {
    pool_.clear();
    double ratio = use_domain_ ? net_.config().unclick_ratio : 0.0;
    data::UnclickSample sample;
    if (use_domain_) {
      sample = data::SampleUnclickRatio(
          d_click_, d_unclick_, ratio,
          DeriveSeed(seed_, "unclick-pool", static_cast<std::uint64_t>(epoch)));
      if (sample.truncated && !warned_truncation_) {
        warnings_.push_back("unclick ratio exceeds the unclicked pool; using "
                            "all unclicked records");
        warned_truncation_ = true;
      }
    }
    unclicked_ = std::move(sample.data.records);
    for (const auto& r : d_click_.records) pool_.push_back(&r);
    for (const auto& r : unclicked_) pool_.push_back(&r);
    const std::size_t n_click = d_click_.size();
    // The effective ratio reflects a truncated pool.
    double eff = n_click ? static_cast<double>(unclicked_.size()) /
                               static_cast<double>(n_click)
                         : 0.0;
    std::vector<std::vector<std::size_t>> out;
    for (auto& b : PlanMixedBatches(n_click, unclicked_.size(),
                                    net_.config().batch_size, eff, rng)) {
      std::vector<std::size_t> idx = b.clicked;
      for (std::size_t j : b.unclicked) idx.push_back(n_click + j);
      out.push_back(std::move(idx));
    }
    return out;
  }

  double RunBatch(std::span<const std::size_t> batch, std::int64_t) override {
    std::vector<const data::ImpressionRecord*> records;
    records.reserve(batch.size());
    for (std::size_t i : batch) records.push_back(pool_[i]);
    return TeacherBatchLoss(net_, records, use_domain_, true);
  }

  std::optional<double> Validate() override {
    if (!validation_) return std::nullopt;
    std::vector<double> scores;
    std::vector<int> labels;
    for (const auto& r : validation_->records) {
      if (!r.clicked()) continue;
      scores.push_back(net_.PredictCvr(r));
      labels.push_back(r.conversion());
    }
    std::vector<double> ones(scores.size(), 1.0);
    return metrics::WeightedAuc(scores, labels, ones);
  }

 private:
  TeacherNetwork& net_;
  const data::Dataset& d_click_;
  const data::Dataset& d_unclick_;
  const data::Dataset* validation_;
  std::uint64_t seed_;
  std::vector<std::string>& warnings_;
  bool use_domain_ = false;
  bool warned_truncation_ = false;
  std::vector<data::ImpressionRecord> unclicked_;
  std::vector<const data::ImpressionRecord*> pool_;
};

}  // namespace

TeacherTrainingResult TrainTeacher(TeacherNetwork& net,
                                   const data::Dataset& d_click,
                                   const data::Dataset& d_unclick,
                                   const data::Dataset* validation,
                                   std::uint64_t seed) {
  if (d_click.empty()) throw DataError("teacher training needs clicked records");
  for (const auto& r : d_click.records) {
    if (!r.clicked()) throw DataError("teacher: D_click holds an unclicked record");
  }
  for (const auto& r : d_unclick.records) {
    if (r.clicked()) throw DataError("teacher: D_unclick holds a clicked record");
  }
  TeacherTrainingResult result;
  TeacherTask task(net, d_click, d_unclick, validation, seed, result.warnings);
  baselines::TrainLoopConfig loop;
  loop.epochs = net.config().epochs;
  loop.learning_rate = net.config().learning_rate;
  loop.seed = DeriveSeed(seed, "teacher-train");
  loop.label = "teacher";
  result.history = baselines::RunTraining(net.graph(), task, loop);
  return result;
}

std::vector<PseudoLabeledRecord> GeneratePseudoLabels(
    const TeacherNetwork& net, const data::Dataset& d_unclick) {
  std::vector<PseudoLabeledRecord> out;
  out.reserve(d_unclick.size());
  for (const auto& r : d_unclick.records) {
    out.push_back({r, net.Forward(r, nn::Mode::kInfer).p_conv, std::nullopt});
  }
  return out;
}

McPseudoLabels McDropoutPseudoLabels(const TeacherNetwork& net,
                                     const data::Dataset& d_unclick,
                                     int n_passes, double dropout_rate,
                                     std::uint64_t seed,
                                     double retain_fraction) {
  if (n_passes < 2) throw ConfigError("MC dropout needs at least 2 passes");
  if (!(retain_fraction >= 0.0 && retain_fraction <= 1.0)) {
    throw ConfigError("retain fraction must lie in [0, 1]");
  }
  McPseudoLabels out;
  out.all.reserve(d_unclick.size());
  const double n = static_cast<double>(n_passes);
  for (const auto& r : d_unclick.records) {
    // Shifted sums keep the variance exactly 0 when every pass agrees.
    double first = 0.0, sum_d = 0.0, sum_d2 = 0.0;
    for (int pass = 0; pass < n_passes; ++pass) {
      std::uint64_t mask_seed =
          DeriveSeed(seed, static_cast<std::uint64_t>(pass),
                     static_cast<std::uint64_t>(r.sample_id));
      double p = net.DropoutForward(r, dropout_rate, mask_seed)[nn::kPositive];
      if (pass == 0) first = p;
      double d = p - first;
      sum_d += d;
      sum_d2 += d * d;
    }
    double mean_d = sum_d / n;
    double var = std::max(0.0, sum_d2 / n - mean_d * mean_d);
    double mean = first + mean_d;
    out.all.push_back({r, {mean, 1.0 - mean}, var});
  }
  std::vector<std::size_t> order(out.all.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return *out.all[a].mc_variance < *out.all[b].mc_variance;
  });
  auto keep = static_cast<std::size_t>(
      std::llround(retain_fraction * static_cast<double>(order.size())));
  order.resize(keep);
  std::sort(order.begin(), order.end());
  out.retained.reserve(keep);
  for (std::size_t i : order) out.retained.push_back(out.all[i]);
  return out;
}

std::optional<double> DiscriminatorAuc(const TeacherNetwork& net,
                                       const data::Dataset& held_out) {
  std::vector<double> scores;
  std::vector<int> labels;
  scores.reserve(held_out.size());
  for (const auto& r : held_out.records) {
    scores.push_back(net.DiscriminatorScore(r));
    labels.push_back(r.y_click);
  }
  std::vector<double> ones(scores.size(), 1.0);
  return metrics::WeightedAuc(scores, labels, ones);
}

void WritePseudoLabels(const std::string& path,
                       const std::vector<PseudoLabeledRecord>& labels) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write pseudo labels '" + path + "'");
  bool with_var = std::any_of(labels.begin(), labels.end(), [](const auto& l) {
    return l.mc_variance.has_value();
  });
  out << "sample_id,p_pos,p_neg" << (with_var ? ",mc_variance" : "") << '\n';
  for (const auto& l : labels) {
    out << l.record.sample_id << ',' << FormatExact(l.soft_label[0]) << ','
        << FormatExact(l.soft_label[1]);
    if (with_var) out << ',' << FormatExact(l.mc_variance.value_or(0.0));
    out << '\n';
  }
  if (!out) throw IoError("failed writing pseudo labels '" + path + "'");
}

std::vector<PseudoLabelEntry> ReadPseudoLabels(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read pseudo labels '" + path + "'");
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) throw ParseError(path + ":1: missing header");
  bool with_var;
  if (line == "sample_id,p_pos,p_neg") {
    with_var = false;
  } else if (line == "sample_id,p_pos,p_neg,mc_variance") {
    with_var = true;
  } else {
    throw ParseError(path + ":1: unexpected header '" + line + "'");
  }
  std::vector<PseudoLabelEntry> out;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto fail = [&](const std::string& what) {
      return ParseError(path + ":" + std::to_string(line_no) + ": " + what);
    };
    auto cols = Split(line, ',');
    if (cols.size() != (with_var ? 4u : 3u)) throw fail("wrong column count");
    auto id = ParseInt(cols[0]);
    auto pos = ParseDouble(cols[1]);
    auto neg = ParseDouble(cols[2]);
    if (!id || !pos || !neg) throw fail("malformed number");
    if (!(*pos >= 0.0 && *neg >= 0.0 && std::abs(*pos + *neg - 1.0) < 1e-9)) {
      throw fail("soft label must be a probability distribution");
    }
    PseudoLabelEntry e{*id, {*pos, *neg}, std::nullopt};
    if (with_var) {
      auto v = ParseDouble(cols[3]);
      if (!v || *v < 0.0) throw fail("malformed variance");
      e.mc_variance = *v;
    }
    out.push_back(e);
  }
  return out;
}

std::vector<PseudoLabeledRecord> AttachPseudoLabels(
    const std::vector<PseudoLabelEntry>& entries, const data::Dataset& pool) {
  std::unordered_map<std::int64_t, std::size_t> index;
  index.reserve(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) {
    index.emplace(pool.records[i].sample_id, i);
  }
  std::vector<PseudoLabeledRecord> out;
  out.reserve(entries.size());
  for (const auto& e : entries) {
    auto it = index.find(e.sample_id);
    if (it == index.end()) {
      throw DataError("pseudo label for unknown sample id " +
                      std::to_string(e.sample_id));
    }
    if (std::abs(e.soft_label[0] + e.soft_label[1] - 1.0) > 1e-9) {
      throw DataError("pseudo label for sample " + std::to_string(e.sample_id) +
                      " does not sum to 1");
    }
    out.push_back({pool.records[it->second], e.soft_label, e.mc_variance});
  }
  return out;
}

}  // namespace ukd::teacher

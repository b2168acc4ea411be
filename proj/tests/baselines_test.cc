#include <cmath>
#include <filesystem>
#include <vector>

#include <gtest/gtest.h>

#include "test_util.h"
#include "ukd/baselines/model.h"
#include "ukd/baselines/objectives.h"
#include "ukd/baselines/trainer.h"
#include "ukd/common/errors.h"
#include "ukd/nn/ops.h"

namespace ukd::baselines {
namespace {

using ::ukd::testing::CategoryOf;
using ::ukd::testing::CheckGradients;
using ::ukd::testing::MakeRecord;
using ::ukd::testing::NumericGradient;
using ::ukd::testing::Perturb;
using ::ukd::testing::RandomDataset;
using ::ukd::testing::RelativeError;

std::vector<const data::ImpressionRecord*> Pointers(const data::Dataset& d) {
  std::vector<const data::ImpressionRecord*> out;
  for (const auto& r : d.records) out.push_back(&r);
  return out;
}

HeadProbs Heads(double cvr, double ctr, double ctcvr = 0.5,
                double domain = 0.5) {
  HeadProbs h;
  h.cvr = nn::FromScore(cvr);
  h.ctr = nn::FromScore(ctr);
  h.ctcvr = nn::FromScore(ctcvr);
  h.domain = nn::FromScore(domain);
  return h;
}

ModelSpec SmallSpec(ModelKind kind) {
  ModelSpec s;
  s.kind = kind;
  s.embedding_dim = 3;
  s.learner_widths = {6, 4};
  s.predictor_widths = {3};
  s.discriminator_widths = {4};
  s.batch_size = 16;
  return s;
}

TEST(SingleCvrObjectiveTest, PerfectAndUniformPredictions) {
  data::Dataset d;
  d.records = {MakeRecord(0, {0}, 1, 1), MakeRecord(1, {0}, 1, 0)};
  auto batch = Pointers(d);
  std::vector<HeadProbs> perfect = {Heads(1.0, 0.5), Heads(0.0, 0.5)};
  EXPECT_NEAR(SingleCvrObjective(batch, perfect).value, 0.0, 1e-6);
  std::vector<HeadProbs> uniform = {Heads(0.5, 0.5), Heads(0.5, 0.5)};
  EXPECT_NEAR(SingleCvrObjective(batch, uniform).value, std::log(2.0), 1e-15);
}

TEST(SingleCvrObjectiveTest, TwoRecordHandValue) {
  data::Dataset d;
  d.records = {MakeRecord(0, {0}, 1, 1), MakeRecord(1, {0}, 1, 0)};
  std::vector<HeadProbs> h = {Heads(0.8, 0.5), Heads(0.3, 0.5)};
  double expected = (-std::log(0.8) - std::log(0.7)) / 2.0;
  EXPECT_NEAR(SingleCvrObjective(Pointers(d), h).value, expected, 1e-15);
}

TEST(SingleCvrObjectiveTest, UnclickedRecordIsUsageError) {
  data::Dataset d;
  d.records = {MakeRecord(0, {0}, 0, 0)};
  std::vector<HeadProbs> h = {Heads(0.5, 0.5)};
  EXPECT_EQ(CategoryOf([&] { SingleCvrObjective(Pointers(d), h); }),
            ErrorCategory::kUsage);
}

TEST(JointObjectiveTest, TwoRecordHandValue) {
  data::Dataset d;
  d.records = {MakeRecord(0, {0}, 1, 1), MakeRecord(1, {0}, 0, 0)};
  std::vector<HeadProbs> h = {Heads(0.7, 0.6), Heads(0.9, 0.2)};
  double expected =
      -std::log(0.7) + 0.2 * (-std::log(0.6) - std::log(0.8)) / 2.0;
  EXPECT_NEAR(JointObjective(Pointers(d), h, 0.2).value, expected, 1e-15);
}

TEST(JointObjectiveTest, GammaZeroReducesToSingleCvrOnClicked) {
  data::Dataset d = RandomDataset(40, 2, 5, 3, 0.5);
  Rng rng(1);
  std::vector<HeadProbs> h;
  for (std::size_t i = 0; i < d.size(); ++i) {
    h.push_back(Heads(UniformUnit(rng), UniformUnit(rng)));
  }
  data::Dataset clicked;
  std::vector<HeadProbs> hc;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (d.records[i].clicked()) {
      clicked.records.push_back(d.records[i]);
      hc.push_back(h[i]);
    }
  }
  EXPECT_NEAR(JointObjective(Pointers(d), h, 0.0).value,
              SingleCvrObjective(Pointers(clicked), hc).value, 1e-14);
}

TEST(JointObjectiveTest, AllUnclickedIsCtrTermOnly) {
  data::Dataset d;
  d.records = {MakeRecord(0, {0}, 0, 0), MakeRecord(1, {0}, 0, 0)};
  std::vector<HeadProbs> h = {Heads(0.9, 0.3), Heads(0.1, 0.4)};
  double ctr = (-std::log(0.7) - std::log(0.6)) / 2.0;
  ObjectiveValue v = JointObjective(Pointers(d), h, 0.2);
  EXPECT_NEAR(v.value, 0.2 * ctr, 1e-15);
  for (const auto& g : v.grads) {
    EXPECT_EQ(g.cvr[0], 0.0);
    EXPECT_EQ(g.cvr[1], 0.0);
  }
}

TEST(EsmmObjectiveTest, ConvertedRecordCtcvrTerm) {
  data::Dataset d;
  d.records = {MakeRecord(0, {0}, 1, 1)};
  std::vector<HeadProbs> h = {Heads(0.9375, 0.96)};
  EXPECT_NEAR(EsmmObjective(Pointers(d), h, 0.0).value, -std::log(0.9), 1e-12);
}

TEST(EsmmObjectiveTest, UnclickedGradientHalfHalf) {
  EXPECT_NEAR(EsmmUnclickCvrGradient(0.5, 0.5), 2.0 / 3.0, 1e-15);
  data::Dataset d;
  d.records = {MakeRecord(0, {0}, 0, 0)};
  std::vector<HeadProbs> h = {Heads(0.5, 0.5)};
  ObjectiveValue v = EsmmObjective(Pointers(d), h, 0.2);
  EXPECT_NEAR(v.grads[0].cvr[0], 2.0 / 3.0, 1e-12);
}

TEST(EsmmObjectiveTest, GradientVanishesAsCtrVanishes) {
  EXPECT_LT(EsmmUnclickCvrGradient(1e-9, 0.5), 1e-8);
  EXPECT_GT(EsmmUnclickCvrGradient(1e-9, 0.5), 0.0);
}

TEST(EsmmObjectiveTest, BoundaryArgumentsAreDomainErrors) {
  for (auto [a, b] : std::vector<std::pair<double, double>>{
           {0.0, 0.5}, {1.0, 0.5}, {0.5, 0.0}, {0.5, 1.0}, {-0.1, 0.5}}) {
    EXPECT_EQ(CategoryOf([&] { EsmmUnclickCvrGradient(a, b); }),
              ErrorCategory::kDomain);
  }
}

TEST(EsmmObjectiveTest, ObjectiveGradientMatchesFiniteDifference) {
  data::Dataset d;
  d.records = {MakeRecord(0, {0}, 0, 0)};
  auto batch = Pointers(d);
  Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    double c = 0.01 + 0.98 * UniformUnit(rng);
    double v = 0.01 + 0.98 * UniformUnit(rng);
    std::vector<HeadProbs> h = {Heads(v, c)};
    double g = EsmmObjective(batch, h, 0.0).grads[0].cvr[0];
    std::vector<HeadProbs> up = {Heads(v + 1e-7, c)};
    std::vector<HeadProbs> down = {Heads(v - 1e-7, c)};
    double fd = (EsmmObjective(batch, up, 0.0).value -
                 EsmmObjective(batch, down, 0.0).value) /
                2e-7;
    EXPECT_NEAR(g, fd, 1e-6);
    EXPECT_NEAR(g, EsmmUnclickCvrGradient(c, v), 1e-12);
  }
}

TEST(DivisionTest, PredictDividesAndClamps) {
  EXPECT_NEAR(PredictCvrDivision(0.02, 0.1), 0.2, 1e-15);
  EXPECT_DOUBLE_EQ(PredictCvrDivision(0.3, 0.1), 1.0 - nn::kProbEpsilon);
  double tiny = PredictCvrDivision(1e-30, 0.0);
  EXPECT_TRUE(std::isfinite(tiny));
  EXPECT_DOUBLE_EQ(tiny, nn::kProbEpsilon);
}

TEST(DivisionTest, ObjectiveUsesCtcvrHead) {
  data::Dataset d;
  d.records = {MakeRecord(0, {0}, 1, 1), MakeRecord(1, {0}, 0, 0)};
  std::vector<HeadProbs> h = {Heads(0.5, 0.6, 0.3), Heads(0.5, 0.2, 0.1)};
  double expected = ((-std::log(0.3) + 0.2 * -std::log(0.6)) +
                     (-std::log(0.9) + 0.2 * -std::log(0.8))) /
                    2.0;
  EXPECT_NEAR(DivisionObjective(Pointers(d), h, 0.2).value, expected, 1e-15);
}

TEST(IpsObjectiveTest, UnitPropensityEqualsJoint) {
  data::Dataset d = RandomDataset(50, 2, 5, 8, 0.5);
  Rng rng(2);
  std::vector<HeadProbs> h;
  for (std::size_t i = 0; i < d.size(); ++i) {
    h.push_back(Heads(UniformUnit(rng), UniformUnit(rng)));
  }
  std::vector<double> ones(d.size(), 1.0);
  auto batch = Pointers(d);
  ObjectiveValue ips = IpsObjective(batch, h, 0.2, 0.01, ones);
  ObjectiveValue joint = JointObjective(batch, h, 0.2);
  EXPECT_EQ(ips.value, joint.value);
  for (std::size_t i = 0; i < d.size(); ++i) {
    EXPECT_EQ(ips.grads[i].cvr, joint.grads[i].cvr);
    EXPECT_EQ(ips.grads[i].ctr, joint.grads[i].ctr);
  }
}

TEST(IpsObjectiveTest, PropensityTenthWeightsTenfold) {
  data::Dataset d;
  d.records = {MakeRecord(0, {0}, 1, 1)};
  std::vector<HeadProbs> h = {Heads(0.6, 0.1)};
  EXPECT_NEAR(IpsObjective(Pointers(d), h, 0.0, 0.01).value,
              10.0 * -std::log(0.6), 1e-12);
  // Below the clip the weight saturates at 1 / clip.
  std::vector<HeadProbs> low = {Heads(0.6, 0.001)};
  EXPECT_NEAR(IpsObjective(Pointers(d), low, 0.0, 0.01).value,
              100.0 * -std::log(0.6), 1e-10);
}

TEST(IpsObjectiveTest, PropensityIsDetachedFromCtrGradient) {
  data::Dataset d;
  d.records = {MakeRecord(0, {0}, 1, 0), MakeRecord(1, {0}, 0, 0)};
  std::vector<HeadProbs> h = {Heads(0.4, 0.3), Heads(0.5, 0.6)};
  auto batch = Pointers(d);
  ObjectiveValue ips = IpsObjective(batch, h, 0.2, 0.01);
  ObjectiveValue joint = JointObjective(batch, h, 0.2);
  for (std::size_t i = 0; i < d.size(); ++i) {
    EXPECT_EQ(ips.grads[i].ctr, joint.grads[i].ctr);
  }
}

TEST(JointDomainObjectiveTest, AddsDomainCrossEntropy) {
  data::Dataset d;
  d.records = {MakeRecord(0, {0}, 1, 0), MakeRecord(1, {0}, 0, 0)};
  std::vector<HeadProbs> h = {Heads(0.4, 0.3, 0.5, 0.7),
                              Heads(0.5, 0.6, 0.5, 0.2)};
  auto batch = Pointers(d);
  double domain = (-std::log(0.7) - std::log(0.8)) / 2.0;
  EXPECT_NEAR(JointDomainObjective(batch, h, 0.2, 1.5).value,
              JointObjective(batch, h, 0.2).value + 1.5 * domain, 1e-15);
  std::vector<HeadProbs> flat = {Heads(0.4, 0.3), Heads(0.5, 0.6)};
  EXPECT_NEAR(JointDomainObjective(batch, flat, 0.0, 1.0).value -
                  JointObjective(batch, flat, 0.0).value,
              std::log(2.0), 1e-15);
}

class NetworkGradientTest : public ::testing::TestWithParam<ModelKind> {};

TEST_P(NetworkGradientTest, AnalyticMatchesFiniteDifferences) {
  ModelSpec spec = SmallSpec(GetParam());
  data::Dataset d = RandomDataset(12, 3, 4, 17, 0.5, 0.5);
  if (spec.kind == ModelKind::kSingleCvr) {
    for (auto& r : d.records) {
      r.y_click = 1;
      r.y_conv = data::ConvLabel::kPositive;
      r.y_pv_conv = 1;
    }
    d.records[0].y_conv = data::ConvLabel::kNegative;
    d.records[0].y_pv_conv = 0;
  }
  BaselineModel model(spec, d.cardinalities);
  model.Initialize(3);
  Perturb(model.graph(), 4, 0.05);
  auto batch = Pointers(d);
  auto r = CheckGradients(model.graph(), [&](bool accumulate) {
    model.graph().ZeroGrad();
    return accumulate ? model.AccumulateBatch(batch) : model.BatchLoss(batch);
  });
  EXPECT_LT(r.max_relative_error, 1e-4) << r.worst_parameter;
}

INSTANTIATE_TEST_SUITE_P(Kinds, NetworkGradientTest,
                         ::testing::Values(ModelKind::kSingleCvr,
                                           ModelKind::kJoint, ModelKind::kEsmm,
                                           ModelKind::kDivision,
                                           ModelKind::kCtrReference));

TEST(NetworkGradientTest, IpsWithFrozenPropensities) {
  ModelSpec spec = SmallSpec(ModelKind::kIpsCfl);
  data::Dataset d = RandomDataset(12, 3, 4, 19, 0.5, 0.5);
  BaselineModel model(spec, d.cardinalities);
  model.Initialize(5);
  Perturb(model.graph(), 6, 0.05);
  auto batch = Pointers(d);
  // Frozen at the base point, the way the detached objective sees them.
  std::vector<double> props;
  for (const auto& r : d.records) props.push_back(model.PredictCtr(r));
  auto frozen_loss = [&] {
    std::vector<HeadProbs> heads;
    for (const auto& r : d.records) heads.push_back(model.Forward(r));
    return IpsObjective(batch, heads, spec.gamma, spec.propensity_clip, props)
        .value;
  };
  model.graph().ZeroGrad();
  model.AccumulateBatch(batch);
  auto numeric = NumericGradient(model.graph(), frozen_loss);
  auto params = model.graph().Parameters();
  for (std::size_t t = 0; t < params.size(); ++t) {
    EXPECT_LT(RelativeError(params[t]->grad, numeric[t]), 1e-4)
        << params[t]->name;
  }
}

TEST(NetworkGradientTest, JointDomainReversesDomainGradient) {
  ModelSpec spec = SmallSpec(ModelKind::kJointDomain);
  spec.reversal_scale = 0.7;
  spec.domain_weight = 1.3;
  data::Dataset d = RandomDataset(12, 3, 4, 23, 0.5, 0.5);
  BaselineModel model(spec, d.cardinalities);
  model.Initialize(7);
  Perturb(model.graph(), 8, 0.05);
  auto batch = Pointers(d);
  auto joint_part = [&] {
    std::vector<HeadProbs> heads;
    for (const auto& r : d.records) heads.push_back(model.Forward(r));
    return JointObjective(batch, heads, spec.gamma).value;
  };
  auto domain_part = [&] { return model.BatchLoss(batch) - joint_part(); };
  model.graph().ZeroGrad();
  model.AccumulateBatch(batch);
  auto g_joint = NumericGradient(model.graph(), joint_part);
  auto g_domain = NumericGradient(model.graph(), domain_part);
  auto params = model.graph().Parameters();
  for (std::size_t t = 0; t < params.size(); ++t) {
    const std::string& name = params[t]->name;
    bool upstream = name == "embedding" || name.rfind("cvr_learner", 0) == 0;
    std::vector<double> expected(g_joint[t].size());
    for (std::size_t i = 0; i < expected.size(); ++i) {
      double sign = upstream ? -spec.reversal_scale : 1.0;
      expected[i] = g_joint[t][i] + sign * g_domain[t][i];
    }
    EXPECT_LT(RelativeError(params[t]->grad, expected), 1e-4) << name;
  }
}

TEST(BaselineModelTest, PredictionsStrictlyInsideUnitInterval) {
  data::Dataset d = RandomDataset(30, 3, 4, 29);
  for (ModelKind kind : {ModelKind::kJoint, ModelKind::kEsmm,
                         ModelKind::kDivision, ModelKind::kIpsCfl}) {
    BaselineModel model(SmallSpec(kind), d.cardinalities);
    model.Initialize(1);
    Perturb(model.graph(), 2, 3.0);  // push the heads toward saturation
    for (const auto& r : d.records) {
      double p = model.PredictCvr(r);
      EXPECT_GT(p, 0.0);
      EXPECT_LT(p, 1.0);
    }
  }
}

TEST(BaselineModelTest, SharedEmbeddingCouplesBranches) {
  for (ModelKind kind : {ModelKind::kJoint, ModelKind::kEsmm}) {
    data::Dataset d = RandomDataset(8, 3, 4, 31, 0.0);
    BaselineModel model(SmallSpec(kind), d.cardinalities);
    model.Initialize(9);
    Perturb(model.graph(), 10, 0.05);
    const auto& probe = d.records[0];
    double before = model.PredictCvr(probe);
    // Unclicked records under Joint push gradient only through the CTR
    // branch; under ESMM the CTCVR term also touches the CVR tower, so
    // restrict the step to the embedding table.
    model.graph().ZeroGrad();
    model.AccumulateBatch(Pointers(d));
    for (nn::Parameter* p : model.graph().Parameters()) {
      if (p->name != "embedding") continue;
      for (std::size_t i = 0; i < p->size(); ++i) p->values[i] -= 5.0 * p->grad[i];
    }
    EXPECT_NE(model.PredictCvr(probe), before) << KindName(kind);
  }
}

TEST(BaselineModelTest, JointUnclickedBatchLeavesCvrTowerUntouched) {
  data::Dataset d = RandomDataset(8, 3, 4, 33, 0.0);
  BaselineModel model(SmallSpec(ModelKind::kJoint), d.cardinalities);
  model.Initialize(11);
  model.graph().ZeroGrad();
  model.AccumulateBatch(Pointers(d));
  bool embedding_moved = false;
  for (nn::Parameter* p : model.graph().Parameters()) {
    bool any = false;
    for (double g : p->grad) any |= g != 0.0;
    if (p->name.rfind("cvr_", 0) == 0) {
      EXPECT_FALSE(any) << p->name;
    }
    if (p->name == "embedding") embedding_moved = any;
  }
  EXPECT_TRUE(embedding_moved);
}

TEST(BaselineModelTest, SaveLoadRoundTrip) {
  data::Dataset d = RandomDataset(20, 3, 4, 35);
  for (ModelKind kind : {ModelKind::kJoint, ModelKind::kDivision,
                         ModelKind::kJointDomain}) {
    ModelSpec spec = SmallSpec(kind);
    spec.gamma = 0.35;
    BaselineModel model(spec, d.cardinalities);
    model.Initialize(12);
    auto path = std::filesystem::temp_directory_path() / "ukd_baseline.ckpt";
    model.Save(path.string());
    BaselineModel loaded = BaselineModel::Load(path.string());
    std::filesystem::remove(path);
    EXPECT_EQ(loaded.spec(), spec);
    EXPECT_EQ(loaded.graph().Snapshot(), model.graph().Snapshot());
    for (const auto& r : d.records) {
      EXPECT_EQ(loaded.PredictCvr(r), model.PredictCvr(r));
    }
  }
}

TEST(ModelKindTest, NamesRoundTripAndUnknownIsUsageError) {
  for (ModelKind kind :
       {ModelKind::kSingleCvr, ModelKind::kJoint, ModelKind::kEsmm,
        ModelKind::kDivision, ModelKind::kIpsCfl, ModelKind::kJointDomain,
        ModelKind::kCtrReference}) {
    EXPECT_EQ(ParseKind(KindName(kind)), kind);
  }
  EXPECT_EQ(CategoryOf([] { ParseKind("dcn"); }), ErrorCategory::kUsage);
}

TEST(ModelSpecTest, InvalidValuesAreConfigErrors) {
  ModelSpec s;
  s.gamma = -0.1;
  EXPECT_EQ(CategoryOf([&] { s.Validate(); }), ErrorCategory::kConfig);
  s = ModelSpec();
  s.propensity_clip = 0.0;
  EXPECT_EQ(CategoryOf([&] { s.Validate(); }), ErrorCategory::kConfig);
  s = ModelSpec();
  s.propensity_clip = 1.5;
  EXPECT_EQ(CategoryOf([&] { s.Validate(); }), ErrorCategory::kConfig);
  s = ModelSpec();
  s.learner_widths.clear();
  EXPECT_EQ(CategoryOf([&] { s.Validate(); }), ErrorCategory::kConfig);
}

TEST(TrainBaselineTest, ZeroEpochsReturnsInitializedModel) {
  data::Dataset d = RandomDataset(64, 3, 4, 37);
  ModelSpec spec = SmallSpec(ModelKind::kJoint);
  spec.epochs = 0;
  TrainedBaseline t = TrainBaseline(spec, d, ValidationSet{}, 5);
  BaselineModel fresh(spec, d.cardinalities);
  fresh.Initialize(DeriveSeed(5, "init"));
  EXPECT_EQ(t.model.graph().Snapshot(), fresh.graph().Snapshot());
  EXPECT_TRUE(t.history.epoch_loss.empty());
  EXPECT_EQ(t.history.steps, 0);
}

TEST(TrainBaselineTest, SameSeedSameHistoryAndParameters) {
  data::Dataset d = RandomDataset(300, 3, 6, 39);
  data::Dataset val = RandomDataset(100, 3, 6, 40);
  ValidationSet vs{&val, std::vector<double>(val.size(), 0.5)};
  ModelSpec spec = SmallSpec(ModelKind::kEsmm);
  spec.epochs = 3;
  TrainedBaseline a = TrainBaseline(spec, d, vs, 7);
  TrainedBaseline b = TrainBaseline(spec, d, vs, 7);
  TrainedBaseline c = TrainBaseline(spec, d, vs, 8);
  EXPECT_EQ(a.history, b.history);
  EXPECT_EQ(a.model.graph().Snapshot(), b.model.graph().Snapshot());
  EXPECT_NE(a.model.graph().Snapshot(), c.model.graph().Snapshot());
  EXPECT_EQ(a.history.epoch_loss.size(), 3u);
  EXPECT_EQ(a.history.validation_score.size(), 3u);
}

TEST(TrainBaselineTest, SingleCvrFitsSeparableToySet) {
  // Conversion is determined by field 0's category parity.
  data::Dataset d;
  d.cardinalities = {6, 3};
  for (int i = 0; i < 240; ++i) {
    std::uint32_t c = static_cast<std::uint32_t>(i % 6);
    d.records.push_back(MakeRecord(i, {c, static_cast<std::uint32_t>(i % 3)},
                                   1, c % 2 == 0));
  }
  ModelSpec spec = SmallSpec(ModelKind::kSingleCvr);
  spec.learning_rate = 0.02;
  spec.epochs = 60;
  TrainedBaseline t = TrainBaseline(spec, d, ValidationSet{}, 1);
  EXPECT_LT(t.history.epoch_loss.back(), 0.02);
  std::vector<const data::ImpressionRecord*> batch = Pointers(d);
  EXPECT_LT(t.model.BatchLoss(batch), 0.02);
}

TEST(TrainingLoopTest, ShuffledBatchesCoverEveryIndexOnce) {
  Rng rng(3);
  auto batches = ShuffledBatches(1000, 128, rng);
  EXPECT_EQ(batches.size(), 8u);
  std::vector<int> seen(1000, 0);
  for (const auto& b : batches) {
    EXPECT_LE(b.size(), 128u);
    for (std::size_t i : b) ++seen[i];
  }
  for (int s : seen) EXPECT_EQ(s, 1);
}

class NanTask : public TrainingTask {
 public:
  explicit NanTask(nn::NetworkGraph& g) : g_(g) {}
  std::vector<std::vector<std::size_t>> PlanEpoch(int, Rng&) override {
    return {{0}};
  }
  double RunBatch(std::span<const std::size_t>, std::int64_t) override {
    return std::nan("");
  }

 private:
  nn::NetworkGraph& g_;
};

TEST(TrainingLoopTest, NonFiniteLossIsDivergenceError) {
  nn::NetworkGraph g({3}, 2);
  g.AddStack("s", 2, {2}, nn::Activation::kIdentity);
  NanTask task(g);
  TrainLoopConfig cfg;
  cfg.epochs = 1;
  EXPECT_EQ(CategoryOf([&] { RunTraining(g, task, cfg); }),
            ErrorCategory::kDivergence);
}

}  // namespace
}  // namespace ukd::baselines

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "test_util.h"
#include "ukd/common/errors.h"
#include "ukd/nn/adam.h"
#include "ukd/nn/checkpoint.h"
#include "ukd/nn/graph.h"
#include "ukd/nn/layers.h"
#include "ukd/nn/ops.h"
#include "ukd/nn/tower.h"

namespace ukd::nn {
namespace {

using ::ukd::testing::CategoryOf;
using ::ukd::testing::CheckGradients;
using ::ukd::testing::Perturb;

NetworkGraph SmallGraph() {
  NetworkGraph g({5, 3, 4}, 3);
  g.AddStack("learner", 9, {6, 4}, Activation::kRelu);
  g.AddStack("head", 4, {3, 2}, Activation::kIdentity);
  return g;
}

TEST(DenseTest, HandSetLayer) {
  Dense d("d", 2, 2, Activation::kRelu);
  d.weight.values = {1.0, -2.0,   // row for output 0
                     0.5, 0.25};  // row for output 1
  d.bias.values = {0.1, -1.0};
  std::vector<double> pre, y;
  d.Forward(std::vector<double>{3.0, 1.0}, pre, y);
  EXPECT_DOUBLE_EQ(pre[0], 1.1);
  EXPECT_DOUBLE_EQ(pre[1], 0.75);
  EXPECT_DOUBLE_EQ(y[0], 1.1);
  EXPECT_DOUBLE_EQ(y[1], 0.75);
  d.Forward(std::vector<double>{-1.0, 1.0}, pre, y);
  EXPECT_DOUBLE_EQ(pre[0], -2.9);
  EXPECT_DOUBLE_EQ(y[0], 0.0);  // ReLU clamps
}

TEST(DenseTest, WrongInputWidthIsConfigError) {
  Dense d("d", 3, 2, Activation::kIdentity);
  std::vector<double> pre, y;
  EXPECT_EQ(CategoryOf([&] { d.Forward(std::vector<double>{1.0}, pre, y); }),
            ErrorCategory::kConfig);
}

TEST(EmbeddingTest, OutOfRangeCategoryUsesOovRow) {
  EmbeddingTable t({3, 2}, 2);
  ASSERT_EQ(t.table.shape[0], 3u + 1 + 2 + 1);
  for (std::size_t i = 0; i < t.table.size(); ++i) {
    t.table.values[i] = static_cast<double>(i);
  }
  std::vector<std::uint32_t> cats{7, 1};
  std::vector<double> out = t.Lookup(cats);
  // Field 0 OOV row is row 3, field 1 category 1 is row 4 + 1.
  EXPECT_EQ(out, (std::vector<double>{6, 7, 10, 11}));
  EXPECT_EQ(t.RowIndex(0, 3), t.RowIndex(0, 1000));
}

TEST(EmbeddingTest, BackwardAccumulatesIntoLookedUpRows) {
  EmbeddingTable t({3}, 2);
  std::vector<std::uint32_t> cats{1};
  t.Backward(cats, std::vector<double>{0.5, -1.0});
  t.Backward(cats, std::vector<double>{0.25, 0.0});
  EXPECT_EQ(t.table.grad,
            (std::vector<double>{0, 0, 0.75, -1.0, 0, 0, 0, 0}));
}

TEST(EmbeddingTest, FieldCountMismatchIsConfigError) {
  EmbeddingTable t({3, 3}, 2);
  std::vector<std::uint32_t> cats{1};
  EXPECT_EQ(CategoryOf([&] { t.Lookup(cats); }), ErrorCategory::kConfig);
}

TEST(GraphTest, ZeroWeightsGiveUniformOutput) {
  NetworkGraph g = SmallGraph();
  std::vector<std::uint32_t> cats{1, 2, 3};
  ActivationTrace t = Forward(g, cats, Mode::kInfer, 0);
  EXPECT_DOUBLE_EQ(t.probabilities[0], 0.5);
  EXPECT_DOUBLE_EQ(t.probabilities[1], 0.5);
}

TEST(GraphTest, InitializeIsDeterministic) {
  NetworkGraph a = SmallGraph(), b = SmallGraph(), c = SmallGraph();
  a.Initialize(42);
  b.Initialize(42);
  c.Initialize(43);
  EXPECT_EQ(a.Snapshot(), b.Snapshot());
  EXPECT_NE(a.Snapshot(), c.Snapshot());
}

TEST(GraphTest, GradientsMatchFiniteDifferences) {
  NetworkGraph g = SmallGraph();
  g.Initialize(3);
  Perturb(g, 4, 0.05);
  std::vector<std::vector<std::uint32_t>> inputs = {{0, 1, 2}, {4, 2, 9}, {2, 0, 1}};
  const Prob2 target{0.3, 0.7};
  auto loss = [&](bool accumulate) {
    g.ZeroGrad();
    double total = 0.0;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      ActivationTrace t = Forward(g, inputs[i], Mode::kTrain, 100 + i, 0.3);
      total += CrossEntropy(t.probabilities, target);
      if (accumulate) {
        Backward(g, t,
                 Softmax2Backward(t.probabilities,
                                  CrossEntropyGrad(t.probabilities, target)));
      }
    }
    return total;
  };
  auto r = CheckGradients(g, loss);
  EXPECT_LT(r.max_relative_error, 1e-4) << r.worst_parameter;
  EXPECT_GT(r.checked, 50u);
}

TEST(GraphTest, BackwardOnInferTraceIsUsageError) {
  NetworkGraph g = SmallGraph();
  std::vector<std::uint32_t> cats{1, 2, 3};
  ActivationTrace t = Forward(g, cats, Mode::kInfer, 0);
  EXPECT_EQ(CategoryOf([&] { Backward(g, t, {1.0, -1.0}); }),
            ErrorCategory::kUsage);
}

TEST(GraphTest, InferModeIgnoresDropout) {
  NetworkGraph g = SmallGraph();
  g.Initialize(8);
  std::vector<std::uint32_t> cats{1, 2, 3};
  ActivationTrace a = Forward(g, cats, Mode::kInfer, 1, 0.5);
  ActivationTrace b = Forward(g, cats, Mode::kInfer, 2, 0.5);
  EXPECT_EQ(a.probabilities, b.probabilities);
}

TEST(GraphTest, SnapshotRestore) {
  NetworkGraph g = SmallGraph();
  g.Initialize(1);
  auto snap = g.Snapshot();
  Perturb(g, 2, 0.5);
  EXPECT_NE(g.Snapshot(), snap);
  g.Restore(snap);
  EXPECT_EQ(g.Snapshot(), snap);
}

TEST(GraphTest, ParameterTextRoundTripIsExact) {
  NetworkGraph g = SmallGraph();
  g.Initialize(11);
  Perturb(g, 12, 1e-3);
  std::stringstream s;
  g.WriteParameters(s);
  NetworkGraph h = SmallGraph();
  h.ReadParameters(s);
  EXPECT_EQ(h.Snapshot(), g.Snapshot());
}

TEST(GraphTest, ShapeMismatchOnReadIsParseError) {
  NetworkGraph g = SmallGraph();
  std::stringstream s;
  g.WriteParameters(s);
  NetworkGraph other({5, 3, 4}, 3);
  other.AddStack("learner", 9, {7, 4}, Activation::kRelu);
  other.AddStack("head", 4, {3, 2}, Activation::kIdentity);
  EXPECT_EQ(CategoryOf([&] { other.ReadParameters(s); }),
            ErrorCategory::kParse);
}

TEST(TowerTest, HeadBackwardMatchesFiniteDifferences) {
  NetworkGraph g({4}, 2);
  DenseStack& learner = g.AddStack("l", 2, {5, 3}, Activation::kRelu);
  DenseStack& head = g.AddStack("p", 3, {4, 2}, Activation::kIdentity);
  g.Initialize(5);
  Perturb(g, 6, 0.05);
  const std::vector<double> x{0.7, -0.4};
  const Prob2 target{0.8, 0.2};
  DropoutMask mask(3, 0.25, 77);
  auto loss = [&](bool accumulate) {
    g.ZeroGrad();
    TowerTrace t;
    Prob2 p = TowerForward(learner, head, x, &t, &mask);
    if (accumulate) {
      std::vector<double> gh = HeadBackward(head, t.predictor, t.probs,
                                            CrossEntropyGrad(p, target));
      learner.Backward(t.learner, t.dropout.Backward(gh));
    }
    return CrossEntropy(p, target);
  };
  auto r = CheckGradients(g, loss);
  EXPECT_LT(r.max_relative_error, 1e-4) << r.worst_parameter;
}

TEST(AdamTest, FirstStepMovesByLearningRate) {
  Parameter p("w", {3});
  p.values = {1.0, 2.0, 3.0};
  p.grad = {0.5, -4.0, 0.0};
  Adam adam(AdamOptions{0.1, 0.9, 0.999, 1e-8}, {&p});
  adam.Step();
  // m_hat = g, v_hat = g^2, so the step is lr * sign(g) up to epsilon.
  EXPECT_NEAR(p.values[0], 0.9, 1e-7);
  EXPECT_NEAR(p.values[1], 2.1, 1e-7);
  EXPECT_DOUBLE_EQ(p.values[2], 3.0);
  EXPECT_EQ(adam.step_count(), 1);
}

TEST(AdamTest, MatchesReferenceRecurrence) {
  Parameter p("w", {1});
  p.values = {0.0};
  AdamOptions opt{0.005, 0.9, 0.999, 1e-8};
  Adam adam(opt, {&p});
  const std::vector<double> grads{1.0, -0.5, 0.25, 2.0, -3.0};
  double x = 0.0, m = 0.0, v = 0.0;
  for (std::size_t t = 1; t <= grads.size(); ++t) {
    double g = grads[t - 1];
    p.grad = {g};
    adam.Step();
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    double mh = m / (1.0 - std::pow(0.9, t));
    double vh = v / (1.0 - std::pow(0.999, t));
    x -= 0.005 * mh / (std::sqrt(vh) + 1e-8);
    EXPECT_NEAR(p.values[0], x, 1e-15);
  }
}

TEST(AdamTest, NonFiniteGradientIsDivergenceError) {
  Parameter p("layer.weight", {2});
  p.grad = {0.0, std::numeric_limits<double>::quiet_NaN()};
  Adam adam(AdamOptions{}, {&p});
  try {
    adam.Step();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.category(), ErrorCategory::kDivergence);
    EXPECT_NE(std::string(e.what()).find("layer.weight"), std::string::npos);
  }
  EXPECT_EQ(p.values, (std::vector<double>{0.0, 0.0}));
}

TEST(CheckpointTest, RoundTripHeaderAndParameters) {
  NetworkGraph g = SmallGraph();
  g.Initialize(21);
  CheckpointHeader h;
  h.kind = "toy";
  h.meta = {{"widths", FormatWidths({6, 4})},
            {"cards", FormatCardinalities({5, 3, 4})},
            {"lr", "0.005"}};
  auto path = std::filesystem::temp_directory_path() / "ukd_ckpt_test.txt";
  WriteCheckpoint(path.string(), h, g);
  CheckpointHeader back = ReadCheckpointHeader(path.string());
  EXPECT_EQ(back.kind, "toy");
  EXPECT_EQ(back.meta, h.meta);
  MetaReader meta(back.meta, "ckpt");
  EXPECT_EQ(meta.Widths("widths"), (std::vector<std::size_t>{6, 4}));
  EXPECT_EQ(meta.Cardinalities("cards"), (std::vector<std::uint32_t>{5, 3, 4}));
  EXPECT_DOUBLE_EQ(meta.Double("lr"), 0.005);
  EXPECT_EQ(CategoryOf([&] { meta.Str("missing"); }), ErrorCategory::kParse);
  EXPECT_EQ(CategoryOf([&] { meta.Int("lr"); }), ErrorCategory::kParse);
  NetworkGraph r = SmallGraph();
  ReadCheckpointParameters(path.string(), r);
  std::filesystem::remove(path);
  EXPECT_EQ(r.Snapshot(), g.Snapshot());
}

TEST(CheckpointTest, EmptyWidthsUseDash) {
  EXPECT_EQ(FormatWidths({}), "-");
  std::map<std::string, std::string> m{{"w", "-"}};
  EXPECT_TRUE(MetaReader(m, "x").Widths("w").empty());
}

TEST(CheckpointTest, MissingFileIsIoError) {
  EXPECT_EQ(CategoryOf([] { ReadCheckpointHeader("/nonexistent/x.ckpt"); }),
            ErrorCategory::kIo);
}

TEST(CheckpointTest, GarbageIsParseError) {
  auto path = std::filesystem::temp_directory_path() / "ukd_ckpt_bad.txt";
  {
    std::ofstream out(path);
    out << "not a checkpoint\n";
  }
  EXPECT_EQ(CategoryOf([&] { ReadCheckpointHeader(path.string()); }),
            ErrorCategory::kParse);
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace ukd::nn

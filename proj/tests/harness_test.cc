#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "test_util.h"
#include "ukd/common/errors.h"
#include "ukd/harness/commands.h"
#include "ukd/harness/config.h"
#include "ukd/harness/pipeline.h"

namespace ukd::harness {
namespace {

namespace fs = std::filesystem;
using ::ukd::testing::CategoryOf;

std::string ReadFile(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string ErrorText(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

fs::path ScratchDir(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("ukd_harness_" + name);
  fs::remove_all(p);
  return p;
}

// A world small enough for a few seconds per pipeline run.
std::vector<std::string> TinyOverrides() {
  return {"data.n_impressions=6000",  "data.n_fields=4",
          "data.cardinalities=20",    "model.learner_widths=8",
          "model.predictor_widths=4", "model.discriminator_widths=4",
          "model.embedding_dim=4",    "model.epochs=1",
          "model.ctr_epochs=1",       "teacher.epochs=1",
          "student.epochs=1",         "noise.epochs=1",
          "noise.max_clicked=300"};
}

TEST(IniTest, ParsesSectionsCommentsAndLines) {
  IniDocument doc = ParseIni(
      "# header\n[run]\nseed = 7  # trailing\n\n[student]\nalpha=0.25\n",
      "mem.cfg");
  EXPECT_EQ(doc.sections.at("run").at("seed").value, "7");
  EXPECT_EQ(doc.sections.at("run").at("seed").line, 3);
  EXPECT_EQ(doc.sections.at("student").at("alpha").value, "0.25");
}

TEST(IniTest, SyntaxErrorsNameSourceAndLine) {
  struct Case {
    const char* text;
    const char* where;
  };
  for (const Case& c : {Case{"[run]\nseed 7\n", "mem.cfg:2"},
                        Case{"seed = 1\n", "mem.cfg:1"},
                        Case{"[run]\nseed = 1\nseed = 2\n", "mem.cfg:3"},
                        Case{"[Run]\n", "mem.cfg:1"},
                        Case{"[run\n", "mem.cfg:1"}}) {
    std::string msg = ErrorText([&] { ParseIni(c.text, "mem.cfg"); });
    EXPECT_NE(msg.find(c.where), std::string::npos) << c.text << " -> " << msg;
    EXPECT_EQ(CategoryOf([&] { ParseIni(c.text, "mem.cfg"); }),
              ErrorCategory::kConfig);
  }
}

TEST(ConfigTest, MalformedValuesAreLocatedConfigErrors) {
  for (const char* text : {"[run]\nseed = -3\n", "[student]\nalpha = abc\n",
                           "[run]\nbogus = 1\n", "[nosuch]\nx = 1\n",
                           "[teacher]\nadversarial = maybe\n",
                           "[model]\nlearner_widths = 8, x\n",
                           "[student]\nalpha = 0.5 0.6\n"}) {
    IniDocument doc = ParseIni(text, "bad.cfg");
    std::string msg = ErrorText([&] { ExperimentConfig::FromDocument(doc); });
    EXPECT_NE(msg.find("bad.cfg:"), std::string::npos) << text << " -> " << msg;
    EXPECT_EQ(CategoryOf([&] { ExperimentConfig::FromDocument(doc); }),
              ErrorCategory::kConfig);
  }
}

TEST(ConfigTest, DefaultsRoundTripThroughIni) {
  ExperimentConfig c;
  c.student.alpha = 0.125;
  c.model.learner_widths = {5, 3};
  c.sweep.values = {0.1, 0.3};
  c.run.models = {"joint", "ukd"};
  c.teacher.adversarial = false;
  ExperimentConfig back = ExperimentConfig::FromDocument(ParseIni(c.ToIni(), "x"));
  EXPECT_EQ(back.ToIni(), c.ToIni());
  EXPECT_EQ(back.student.alpha, 0.125);
  EXPECT_FALSE(back.teacher.adversarial);
}

TEST(ConfigTest, CrossFieldValidation) {
  auto with = [](const std::string& o) {
    CommandOptions opts;
    opts.overrides = {o};
    return CategoryOf([&] { ResolveConfig(opts); });
  };
  EXPECT_EQ(with("data.source=log"), ErrorCategory::kConfig);
  EXPECT_EQ(with("sweep.parameter=beta"), ErrorCategory::kConfig);
  EXPECT_EQ(with("noise.k_values=120"), ErrorCategory::kConfig);
  EXPECT_EQ(with("teacher.pseudo_labels=fancy"), ErrorCategory::kConfig);
  EXPECT_EQ(with("student.dropout_rate=1"), ErrorCategory::kConfig);
  EXPECT_FALSE(with("student.alpha=0").has_value());
}

TEST(ConfigTest, OverridesApplyAndRejectBadSyntax) {
  IniDocument doc;
  doc.source = "<defaults>";
  ApplyOverride(doc, "student.lambda=5");
  EXPECT_EQ(ExperimentConfig::FromDocument(doc).student.lambda, 5.0);
  for (const char* bad : {"lambda=5", "student.lambda", "=5", "student.=1"}) {
    IniDocument d;
    EXPECT_TRUE(CategoryOf([&] { ApplyOverride(d, bad); }).has_value()) << bad;
  }
  CommandOptions opts;
  opts.overrides = {"run.seed=3"};
  opts.seed = 9;
  opts.n_seeds = 2;
  ExperimentConfig c = ResolveConfig(opts);
  EXPECT_EQ(c.run.seed, 9u);
  EXPECT_EQ(c.run.repetitions, 2);
  opts.n_seeds = 0;
  EXPECT_EQ(CategoryOf([&] { ResolveConfig(opts); }), ErrorCategory::kUsage);
}

TEST(ConfigTest, ShippedDefaultConfigLoads) {
  ExperimentConfig c =
      ExperimentConfig::Load(std::string(UKD_SOURCE_DIR) + "/configs/default.cfg");
  c.Validate();
  EXPECT_EQ(c.model.gamma, 0.2);
  EXPECT_EQ(c.student.alpha, 0.5);
  EXPECT_EQ(c.student.lambda, 100.0);
  EXPECT_EQ(c.student.dropout_rate, 0.2);
  EXPECT_EQ(c.model.batch_size, 128u);
  EXPECT_EQ(c.model.learning_rate, 0.005);
}

TEST(ComparisonTest, CsvRoundTripAndRanking) {
  std::vector<RunRecord> runs;
  for (int rep = 0; rep < 3; ++rep) {
    for (const char* m : {"a", "b", "c"}) {
      RunRecord r{m, rep, {}};
      double base = m[0] == 'a' ? 0.7 : m[0] == 'b' ? 0.8 : 0.6;
      r.report.auc_cvr = base + 0.01 * rep;
      r.report.nll_cvr = 1.0 - base;
      runs.push_back(r);
    }
  }
  ComparisonTable t = BuildComparison(runs);
  EXPECT_EQ(t.Find("b", "auc_cvr")->rank, "best");
  EXPECT_EQ(t.Find("a", "auc_cvr")->rank, "second");
  EXPECT_EQ(t.Find("c", "auc_cvr")->rank, "");
  EXPECT_EQ(t.Find("b", "nll_cvr")->rank, "best");  // lower is better
  EXPECT_NEAR(*t.Find("a", "auc_cvr")->mean, 0.71, 1e-12);
  EXPECT_NEAR(*t.Find("a", "auc_cvr")->spread, 0.01, 1e-12);
  EXPECT_EQ(t.Find("a", "d_auc_cvr")->n, 0);
  EXPECT_FALSE(t.Find("a", "d_auc_cvr")->mean.has_value());
  EXPECT_EQ(ComparisonTable::FromCsv(t.ToCsv()), t);
  EXPECT_EQ(CategoryOf([] { ComparisonTable::FromCsv("model,metric\n"); }),
            ErrorCategory::kParse);
}

TEST(ComparisonTest, IdenticalSpecsGiveIdenticalRows) {
  std::vector<RunRecord> runs;
  for (int rep = 0; rep < 4; ++rep) {
    metrics::MetricReport r;
    r.auc_cvr = 0.6 + 0.02 * rep;
    runs.push_back({"x", rep, r});
    runs.push_back({"y", rep, r});
  }
  ComparisonTable t = BuildComparison(runs);
  EXPECT_EQ(t.Find("x", "auc_cvr")->mean, t.Find("y", "auc_cvr")->mean);
  EXPECT_EQ(t.Find("x", "auc_cvr")->spread, t.Find("y", "auc_cvr")->spread);
}

TEST(PipelineTest, ModelNamesAndUsageErrors) {
  for (const auto& n : {"single-cvr", "joint", "joint-domain", "esmm",
                        "division", "ips-cfl", "ukd-base", "ukd"}) {
    EXPECT_NO_THROW(CheckModelName(n)) << n;
  }
  std::string msg = ErrorText([] { CheckModelName("bogus"); });
  EXPECT_NE(msg.find("single-cvr"), std::string::npos);
  EXPECT_EQ(CategoryOf([] { CheckModelName("bogus"); }), ErrorCategory::kUsage);
}

TEST(PipelineTest, SeedsDependOnComponentAndRepetition) {
  ExperimentConfig c;
  Experiment a(c, 5, 0), b(c, 5, 1), d(c, 6, 0);
  EXPECT_EQ(a.Seed("teacher"), DeriveSeed(5, "teacher", 0));
  EXPECT_NE(a.Seed("teacher"), a.Seed("data"));
  EXPECT_NE(a.Seed("teacher"), b.Seed("teacher"));
  EXPECT_NE(a.Seed("teacher"), d.Seed("teacher"));
}

CommandOptions TinyOptions(const fs::path& out) {
  CommandOptions o;
  o.overrides = TinyOverrides();
  o.out = out.string();
  o.seed = 4;
  return o;
}

TEST(CommandTest, TrainJointWritesFullReport) {
  fs::path dir = ScratchDir("train_joint");
  CommandOptions o = TinyOptions(dir);
  o.model = "joint";
  std::ostringstream log;
  CmdTrain(o, log);
  metrics::MetricReport r =
      metrics::MetricReport::FromKeyValue(ReadFile(dir / "report_joint.txt"));
  for (const auto& name : metrics::MetricReport::MetricNames()) {
    EXPECT_TRUE(r.Get(name).has_value()) << name;
  }
  EXPECT_TRUE(fs::exists(dir / "joint.ckpt"));
  EXPECT_TRUE(fs::exists(dir / "manifest.txt"));
  fs::remove_all(dir);
}

TEST(CommandTest, UkdStandaloneMatchesOrchestratedRun) {
  fs::path full = ScratchDir("ukd_full"), solo = ScratchDir("ukd_solo");
  CommandOptions o = TinyOptions(full);
  o.model = "ukd";
  std::ostringstream log;
  CmdTrain(o, log);
  CommandOptions s = TinyOptions(solo);
  s.model = "ukd";
  s.pseudo_labels = (full / "pseudo_labels.csv").string();
  CmdTrain(s, log);
  EXPECT_EQ(ReadFile(full / "report_ukd.txt"), ReadFile(solo / "report_ukd.txt"));
  EXPECT_FALSE(fs::exists(solo / "teacher.ckpt"));
  s.pseudo_labels = (solo / "missing.csv").string();
  EXPECT_EQ(CategoryOf([&] { CmdTrain(s, log); }), ErrorCategory::kPipeline);
  fs::remove_all(full);
  fs::remove_all(solo);
}

TEST(CommandTest, ReportsAreByteIdenticalOnRerun) {
  fs::path a = ScratchDir("det_a"), b = ScratchDir("det_b");
  std::ostringstream log;
  for (const fs::path& dir : {a, b}) {
    CommandOptions o = TinyOptions(dir);
    o.models = {"single-cvr", "ukd"};
    o.n_seeds = 2;
    CmdCompare(o, log);
    CommandOptions g = TinyOptions(dir);
    CmdGenerate(g, log);
  }
  for (const char* f : {"compare.csv", "compare_runs.csv", "dataset.csv",
                        "oracle.txt"}) {
    EXPECT_EQ(ReadFile(a / f), ReadFile(b / f)) << f;
    EXPECT_FALSE(ReadFile(a / f).empty()) << f;
  }
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(CommandTest, CompareNeedsTwoModels) {
  CommandOptions o = TinyOptions(ScratchDir("cmp1"));
  o.models = {"joint"};
  std::ostringstream log;
  EXPECT_EQ(CategoryOf([&] { CmdCompare(o, log); }), ErrorCategory::kUsage);
  o.models = {"joint", "nope"};
  EXPECT_EQ(CategoryOf([&] { CmdCompare(o, log); }), ErrorCategory::kUsage);
}

TEST(CommandTest, SweepRowsPerCellAndJobIndependence) {
  fs::path a = ScratchDir("sweep_a"), b = ScratchDir("sweep_b");
  std::ostringstream log;
  for (const fs::path& dir : {a, b}) {
    CommandOptions o = TinyOptions(dir);
    o.overrides.push_back("sweep.models=ukd-base");
    o.overrides.push_back("data.n_impressions=3000");
    o.n_seeds = 3;
    o.jobs = dir == a ? 1 : 3;
    CmdSweep(o, log);
  }
  std::string csv = ReadFile(a / "sweep.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 4 * 3);
  EXPECT_EQ(csv, ReadFile(b / "sweep.csv"));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(CommandTest, NoiseExperimentTableAndAbsentRow) {
  fs::path dir = ScratchDir("noise");
  CommandOptions o = TinyOptions(dir);
  o.overrides.push_back("noise.k_values=0, 20");
  o.n_seeds = 2;
  std::ostringstream log;
  CmdNoiseExperiment(o, log);
  std::string csv = ReadFile(dir / "noise.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "k,seed,mean_kl_noisy,mean_kl_clean");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 2 * 2);
  std::string summary = ReadFile(dir / "noise_summary.txt");
  EXPECT_NE(summary.find("k=0: absent-noisy"), std::string::npos) << summary;
  EXPECT_NE(summary.find("k=20: noisy > clean in"), std::string::npos);
  fs::remove_all(dir);
}

TEST(CommandTest, UnwritableOutputIsIoError) {
  CommandOptions o = TinyOptions("/proc/ukd_cannot_write");
  std::ostringstream log;
  EXPECT_EQ(CategoryOf([&] { CmdGenerate(o, log); }), ErrorCategory::kIo);
}

TEST(RunManifestTest, MissingArtifactIsPipelineError) {
  RunManifest m("test", ExperimentConfig{});
  m.AddArtifact("report", "/nonexistent/ukd/report.txt");
  fs::path p = ScratchDir("manifest");
  EXPECT_EQ(CategoryOf([&] { m.Write(p.string()); }), ErrorCategory::kPipeline);
}

int RunCli(const std::string& args, std::string* err = nullptr) {
  fs::path err_file = fs::temp_directory_path() / "ukd_cli_err.txt";
  std::string cmd = std::string(UKD_CLI_PATH) + " " + args + " >/dev/null 2>" +
                    err_file.string();
  int status = std::system(cmd.c_str());
  if (err) *err = ReadFile(err_file);
  return WEXITSTATUS(status);
}

TEST(CliTest, ExitCodesAndOneLineErrors) {
  std::string err;
  EXPECT_EQ(RunCli("train --model bogus", &err), 2);
  EXPECT_EQ(err.rfind("error: usage: ", 0), 0u) << err;
  EXPECT_EQ(std::count(err.begin(), err.end(), '\n'), 1);
  EXPECT_EQ(RunCli("frobnicate"), 2);
  EXPECT_EQ(RunCli("generate --config /nonexistent.cfg", &err), 8) << err;
  fs::path bad = fs::temp_directory_path() / "ukd_bad.cfg";
  {
    std::ofstream(bad) << "[run]\nseed = x\n";
  }
  EXPECT_EQ(RunCli("generate --config " + bad.string(), &err), 3);
  EXPECT_EQ(err.rfind("error: config: ", 0), 0u) << err;
  EXPECT_EQ(RunCli("generate --set run.seed=1 --out /proc/ukd_nope", &err), 8)
      << err;
  EXPECT_EQ(RunCli("--help"), 0);
}

}  // namespace
}  // namespace ukd::harness

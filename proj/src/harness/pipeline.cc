#include "ukd/harness/pipeline.h"

#include <filesystem>

#include "ukd/common/errors.h"
#include "ukd/data/log_file.h"

namespace ukd::harness {

const std::vector<std::string>& ModelNames() {
  static const std::vector<std::string> kNames = {
      "single-cvr", "joint", "joint-domain", "esmm", "division",
      "ips-cfl",    "ukd-base", "ukd", "teacher"};
  return kNames;
}

void CheckModelName(const std::string& name) {
  for (const auto& n : ModelNames()) {
    if (n == name) return;
  }
  std::string valid;
  for (const auto& n : ModelNames()) valid += (valid.empty() ? "" : ", ") + n;
  throw UsageError("unknown model '" + name + "' (valid: " + valid + ")");
}

PreparedData PrepareData(const ExperimentConfig& config,
                         std::uint64_t data_seed) {
  PreparedData out;
  if (config.data.source == "synthetic") {
    data::GeneratorConfig g = config.data.generator;
    g.seed = data_seed;
    data::SyntheticWorld world = data::GenerateSynthetic(g);
    out.full = std::move(world.dataset);
    out.oracle = std::move(world.oracle);
  } else {
    out.full = data::LoadLogFile(config.data.log_path);
    if (!config.data.oracle_path.empty()) {
      out.oracle = data::OracleWorld::Load(config.data.oracle_path);
    }
  }
  out.full.Validate();
  out.split = data::SplitByDay(out.full, config.data.n_days);
  out.train_click = data::SplitByClick(out.split.train);
  if (out.oracle) {
    out.test_counterfactual = data::CounterfactualLabels(
        *out.oracle, out.split.test, DeriveSeed(data_seed, "counterfactual"));
  }
  return out;
}

Experiment::Experiment(ExperimentConfig config, std::uint64_t master_seed,
                       int repetition)
    : config_(std::move(config)),
      master_seed_(master_seed),
      repetition_(repetition) {}

std::uint64_t Experiment::Seed(const std::string& component) const {
  return DeriveSeed(master_seed_, component,
                    static_cast<std::uint64_t>(repetition_));
}

const PreparedData& Experiment::Data() {
  if (!data_) data_ = PrepareData(config_, Seed("data"));
  return *data_;
}

baselines::ValidationSet Experiment::Validation() {
  return baselines::ValidationSet{&Data().split.validation,
                                  ReferenceValidationScores()};
}

const baselines::BaselineModel& Experiment::ReferenceCtr() {
  if (!reference_) {
    const PreparedData& d = Data();
    baselines::ValidationSet val{&d.split.validation, {}};
    auto trained = baselines::TrainBaseline(
        config_.MakeBaselineSpec(baselines::ModelKind::kCtrReference),
        d.split.train, val, Seed("ctr-reference"));
    reference_.emplace(std::move(trained.model));
    for (const auto& r : d.split.validation.records) {
      reference_val_.push_back(reference_->PredictCtr(r));
    }
    for (const auto& r : d.split.test.records) {
      reference_test_.push_back(reference_->PredictCtr(r));
    }
  }
  return *reference_;
}

const std::vector<double>& Experiment::ReferenceValidationScores() {
  ReferenceCtr();
  return reference_val_;
}

const std::vector<double>& Experiment::ReferenceTestScores() {
  ReferenceCtr();
  return reference_test_;
}

const teacher::TeacherNetwork& Experiment::Teacher() {
  if (!teacher_) {
    const PreparedData& d = Data();
    teacher::TeacherNetwork net(config_.MakeTeacherConfig(),
                                d.full.cardinalities);
    std::uint64_t seed = Seed("teacher");
    net.Initialize(DeriveSeed(seed, "init"));
    auto result = teacher::TrainTeacher(net, d.train_click.clicked,
                                        d.train_click.unclicked,
                                        &d.split.validation, seed);
    for (auto& w : result.warnings) warnings_.push_back("teacher: " + w);
    teacher_.emplace(std::move(net));
  }
  return *teacher_;
}

const std::vector<teacher::PseudoLabeledRecord>& Experiment::PseudoLabels() {
  if (!pseudo_labels_) {
    const teacher::TeacherNetwork& net = Teacher();
    const data::Dataset& pool = Data().train_click.unclicked;
    if (config_.teacher.pseudo_labels == "mc-dropout") {
      auto mc = teacher::McDropoutPseudoLabels(
          net, pool, config_.teacher.mc_passes, config_.teacher.mc_dropout_rate,
          Seed("mc-dropout"), config_.teacher.mc_retain);
      pseudo_labels_ = std::move(mc.retained);
    } else {
      pseudo_labels_ = teacher::GeneratePseudoLabels(net, pool);
    }
  }
  return *pseudo_labels_;
}

metrics::MetricReport Experiment::EvaluateTest(
    const baselines::CvrModel& model) {
  const PreparedData& d = Data();
  std::vector<double> cvr = baselines::ScoreCvr(model, d.split.test);
  return metrics::Evaluate(cvr, ReferenceTestScores(), d.split.test,
                           d.test_counterfactual);
}

std::vector<std::string> Experiment::TakeWarnings() {
  return std::exchange(warnings_, {});
}

ModelResult Experiment::Train(const std::string& name,
                              const std::string& pseudo_label_path) {
  CheckModelName(name);
  const PreparedData& d = Data();
  ModelResult result;
  result.name = name;
  if (name == "teacher") {
    const teacher::TeacherNetwork& net = Teacher();
    auto shared = std::make_shared<teacher::TeacherNetwork>(net);
    result.model = shared;
    result.save_checkpoint = [shared](const std::string& p) { shared->Save(p); };
  } else if (name == "ukd" || name == "ukd-base") {
    std::vector<teacher::PseudoLabeledRecord> external;
    const std::vector<teacher::PseudoLabeledRecord>* labels = nullptr;
    if (!pseudo_label_path.empty()) {
      if (!std::filesystem::exists(pseudo_label_path)) {
        throw PipelineError("pseudo-label file '" + pseudo_label_path +
                            "' does not exist; run the teacher first");
      }
      try {
        external = teacher::AttachPseudoLabels(
            teacher::ReadPseudoLabels(pseudo_label_path),
            d.train_click.unclicked);
      } catch (const Error& e) {
        throw PipelineError("cannot use pseudo labels: " +
                            std::string(e.what()));
      }
      labels = &external;
    } else {
      labels = &PseudoLabels();
    }
    auto variant = name == "ukd" ? student::Variant::kUncertainty
                                 : student::Variant::kBase;
    auto net = std::make_shared<student::StudentNetwork>(
        config_.MakeStudentConfig(variant), d.full.cardinalities);
    std::uint64_t seed = Seed(name);
    net->Initialize(DeriveSeed(seed, "init"));
    result.history = student::TrainStudent(*net, d.train_click.clicked,
                                           *labels, Validation(), seed);
    result.model = net;
    result.save_checkpoint = [net](const std::string& p) { net->Save(p); };
  } else {
    auto kind = baselines::ParseKind(name);
    auto trained = baselines::TrainBaseline(config_.MakeBaselineSpec(kind),
                                            d.split.train, Validation(),
                                            Seed(name));
    auto model =
        std::make_shared<baselines::BaselineModel>(std::move(trained.model));
    result.history = std::move(trained.history);
    result.model = model;
    result.save_checkpoint = [model](const std::string& p) { model->Save(p); };
  }
  result.report = EvaluateTest(*result.model);
  result.warnings = TakeWarnings();
  return result;
}

}  // namespace ukd::harness

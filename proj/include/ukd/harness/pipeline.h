#ifndef UKD_HARNESS_PIPELINE_H_
#define UKD_HARNESS_PIPELINE_H_

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ukd/baselines/model.h"
#include "ukd/data/dataset.h"
#include "ukd/data/synthetic.h"
#include "ukd/harness/config.h"
#include "ukd/metrics/metrics.h"
#include "ukd/student/student.h"
#include "ukd/teacher/teacher.h"

namespace ukd::harness {

// Names accepted by the train/compare/sweep commands.
const std::vector<std::string>& ModelNames();
// UsageError listing ModelNames() for anything else.
void CheckModelName(const std::string& name);

struct PreparedData {
  data::Dataset full;
  std::optional<data::OracleWorld> oracle;
  data::DaySplit split;
  data::ClickSplit train_click;  // D_click / D_unclick of the training days
  std::vector<int> test_counterfactual;  // empty without an oracle
};

// Synthetic generation (seeded by `data_seed`) or log loading, then the day
// split and the test split's counterfactual labels.
PreparedData PrepareData(const ExperimentConfig& config,
                         std::uint64_t data_seed);

struct ModelResult {
  std::string name;
  std::shared_ptr<const baselines::CvrModel> model;
  std::function<void(const std::string&)> save_checkpoint;
  baselines::TrainingHistory history;
  metrics::MetricReport report;  // test split
  std::vector<std::string> warnings;
};

// One repetition of an experiment: a dataset, its shared reference CTR
// model, and (for the ukd variants) a cached teacher with its pseudo-labels.
// Every seed is DeriveSeed(master seed, component name, repetition).
class Experiment {
 public:
  Experiment(ExperimentConfig config, std::uint64_t master_seed,
             int repetition);

  const ExperimentConfig& config() const { return config_; }
  std::uint64_t Seed(const std::string& component) const;

  const PreparedData& Data();
  const baselines::BaselineModel& ReferenceCtr();
  const std::vector<double>& ReferenceValidationScores();
  const std::vector<double>& ReferenceTestScores();

  const teacher::TeacherNetwork& Teacher();
  // Plain or MC-dropout labels over the training D_unclick per config.
  const std::vector<teacher::PseudoLabeledRecord>& PseudoLabels();

  // Trains `name`. For ukd / ukd-base a non-empty `pseudo_label_path` replaces
  // the teacher stage; a missing or unreadable file is a pipeline error.
  ModelResult Train(const std::string& name,
                    const std::string& pseudo_label_path = "");

  metrics::MetricReport EvaluateTest(const baselines::CvrModel& model);
  std::vector<std::string> TakeWarnings();

 private:
  baselines::ValidationSet Validation();

  ExperimentConfig config_;
  std::uint64_t master_seed_;
  int repetition_;
  std::optional<PreparedData> data_;
  std::optional<baselines::BaselineModel> reference_;
  std::vector<double> reference_val_;
  std::vector<double> reference_test_;
  std::optional<teacher::TeacherNetwork> teacher_;
  std::optional<std::vector<teacher::PseudoLabeledRecord>> pseudo_labels_;
  std::vector<std::string> warnings_;
};

}  // namespace ukd::harness

#endif  // UKD_HARNESS_PIPELINE_H_

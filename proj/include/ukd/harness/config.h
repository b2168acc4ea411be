#ifndef UKD_HARNESS_CONFIG_H_
#define UKD_HARNESS_CONFIG_H_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ukd/baselines/model.h"
#include "ukd/data/synthetic.h"
#include "ukd/student/student.h"
#include "ukd/teacher/teacher.h"

namespace ukd::harness {

// Config grammar:
//
//   # comment            (also after values)
//   [section]
//   key = value
//
// Section and key names are [a-z0-9_]; a key may appear once per section.
// Lists are comma separated. Every error names the source and line.
struct IniEntry {
  std::string value;
  int line = 0;
};

struct IniDocument {
  std::string source;
  std::map<std::string, std::map<std::string, IniEntry>> sections;

  void Set(const std::string& section, const std::string& key,
           const std::string& value, int line = 0);
};

IniDocument ParseIni(const std::string& text, const std::string& source);
IniDocument LoadIniFile(const std::string& path);

struct DataSection {
  std::string source = "synthetic";  // synthetic | log
  std::string log_path;
  std::string oracle_path;  // optional with source = log
  data::GeneratorConfig generator;
  int n_days = 7;
};

struct ModelSection {
  std::size_t embedding_dim = 8;
  std::vector<std::size_t> learner_widths{64, 32};
  std::vector<std::size_t> predictor_widths{16};
  std::vector<std::size_t> discriminator_widths{32};
  double learning_rate = 0.005;
  std::size_t batch_size = 128;
  int epochs = 2;
  int ctr_epochs = 2;  // shared reference CTR model
  double gamma = 0.2;
  double propensity_clip = 0.01;
  double reversal_scale = 1.0;
  double domain_weight = 1.0;
};

struct TeacherSection {
  int epochs = 2;
  double unclick_ratio = 1.0;
  double domain_weight = 1.0;
  double reversal_scale = 1.0;
  bool adversarial = true;
  std::string pseudo_labels = "plain";  // plain | mc-dropout
  int mc_passes = 10;
  double mc_dropout_rate = 0.2;
  double mc_retain = 0.8;
};

struct StudentSection {
  double alpha = 0.5;
  double gamma = 0.2;
  double lambda = 100.0;
  double dropout_rate = 0.2;
  int epochs = 2;
};

struct SweepSection {
  // unclick_ratio | dropout_rate | alpha | lambda | gamma
  std::string parameter = "unclick_ratio";
  std::vector<double> values{0.0, 0.5, 1.0, 6.0};
  std::vector<std::string> models{"ukd"};
};

struct NoiseSection {
  std::vector<double> k_values{10, 20, 30, 40};
  int epochs = 20;  // long enough for the heads to fit the flipped labels
  double dropout_rate = 0.0;
  std::size_t max_clicked = 0;  // 0 = every clicked training record
};

struct RunSection {
  std::uint64_t seed = 1;
  int repetitions = 5;
  std::string output_dir = "out";
  int jobs = 1;
  std::vector<std::string> models{"single-cvr", "joint", "ukd-base", "ukd"};
};

struct ExperimentConfig {
  DataSection data;
  ModelSection model;
  TeacherSection teacher;
  StudentSection student;
  SweepSection sweep;
  NoiseSection noise;
  RunSection run;

  // Unknown sections or keys and malformed values raise ConfigError with the
  // location.
  static ExperimentConfig FromDocument(const IniDocument& doc);
  static ExperimentConfig Load(const std::string& path);
  // Every key, in grammar form; FromDocument(ParseIni(ToIni())) round-trips.
  std::string ToIni() const;
  // Cross-field checks (one data source, nonempty grids, ranges).
  void Validate() const;

  baselines::ModelSpec MakeBaselineSpec(baselines::ModelKind kind) const;
  teacher::TeacherConfig MakeTeacherConfig() const;
  student::StudentConfig MakeStudentConfig(student::Variant variant) const;
  student::StudentConfig MakeNoiseModelConfig() const;
};

// Applies "section.key=value" to a document.
void ApplyOverride(IniDocument& doc, const std::string& assignment);

}  // namespace ukd::harness

#endif  // UKD_HARNESS_CONFIG_H_

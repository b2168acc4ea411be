#ifndef UKD_HARNESS_COMMANDS_H_
#define UKD_HARNESS_COMMANDS_H_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ukd/harness/config.h"
#include "ukd/metrics/metrics.h"

namespace ukd::harness {

struct CommandOptions {
  std::string config_path;               // empty: built-in defaults
  std::vector<std::string> overrides;    // section.key=value
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::string model;                     // train
  std::vector<std::string> models;       // compare
  std::optional<int> n_seeds;            // compare, sweep, noise-exp
  std::string pseudo_labels;             // train ukd / ukd-base standalone
  std::optional<int> jobs;
};

// Config file + overrides + command-line flags.
ExperimentConfig ResolveConfig(const CommandOptions& options);

// Key/value record of a command run. Every artifact must exist when written.
class RunManifest {
 public:
  RunManifest(std::string command, const ExperimentConfig& config);
  void AddSeed(const std::string& name, std::uint64_t value);
  void AddArtifact(const std::string& kind, const std::string& path);
  void AddTiming(const std::string& name, double seconds);
  void AddNote(const std::string& note);
  // PipelineError if a listed artifact is missing.
  void Write(const std::string& path) const;

 private:
  std::string command_;
  std::string config_ini_;
  std::vector<std::pair<std::string, std::uint64_t>> seeds_;
  std::vector<std::pair<std::string, std::string>> artifacts_;
  std::vector<std::pair<std::string, double>> timings_;
  std::vector<std::string> notes_;
};

struct RunRecord {
  std::string model;
  int repetition = 0;
  metrics::MetricReport report;
};

struct ComparisonRow {
  std::string model;
  std::string metric;
  std::optional<double> mean;
  std::optional<double> spread;  // sample standard deviation
  int n = 0;                     // runs with the metric present
  std::string rank;              // "best", "second" or empty
  friend bool operator==(const ComparisonRow&, const ComparisonRow&) = default;
};

// Rows ordered by model (first appearance) then MetricNames() order.
struct ComparisonTable {
  std::vector<ComparisonRow> rows;

  static std::string CsvHeader();  // model,metric,mean,std,n,rank
  std::string ToCsv() const;
  static ComparisonTable FromCsv(const std::string& text);
  const ComparisonRow* Find(const std::string& model,
                            const std::string& metric) const;
  friend bool operator==(const ComparisonTable&,
                         const ComparisonTable&) = default;
};

// Mean and spread per (model, metric); NLL-type metrics rank lower-better.
ComparisonTable BuildComparison(const std::vector<RunRecord>& runs);

// Each writes into the resolved output directory and prints a short summary
// to `log`. Errors surface as ukd::Error.
void CmdGenerate(const CommandOptions& options, std::ostream& log);
void CmdTrain(const CommandOptions& options, std::ostream& log);
void CmdCompare(const CommandOptions& options, std::ostream& log);
void CmdSweep(const CommandOptions& options, std::ostream& log);
void CmdNoiseExperiment(const CommandOptions& options, std::ostream& log);

}  // namespace ukd::harness

#endif  // UKD_HARNESS_COMMANDS_H_

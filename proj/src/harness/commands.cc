#include "ukd/harness/commands.h"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <algorithm>
#include <map>
#include <ostream>
#include <sstream>

#include "ukd/common/errors.h"
#include "ukd/common/parallel.h"
#include "ukd/common/text.h"
#include "ukd/data/log_file.h"
#include "ukd/harness/pipeline.h"
#include "ukd/student/student.h"

namespace ukd::harness {

namespace fs = std::filesystem;

namespace {

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double Seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

std::string PrepareOutputDir(const ExperimentConfig& config) {
  const std::string& dir = config.run.output_dir;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw IoError("cannot create output directory '" + dir + "'");
  }
  return dir;
}

std::string Join(const std::string& dir, const std::string& file) {
  return (fs::path(dir) / file).string();
}

void WriteText(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << text;
  if (!out) throw IoError("failed writing '" + path + "'");
}

std::string HistoryCsv(const baselines::TrainingHistory& h) {
  std::string out = "epoch,loss,validation_score\n";
  for (std::size_t i = 0; i < h.epoch_loss.size(); ++i) {
    out += std::to_string(i + 1) + "," + FormatExact(h.epoch_loss[i]) + "," +
           (h.validation_score[i] ? FormatExact(*h.validation_score[i])
                                  : std::string("absent")) +
           "\n";
  }
  out += "# best_epoch=" + std::to_string(h.best_epoch) + "\n";
  return out;
}

bool LowerIsBetter(const std::string& metric) {
  return metric.find("nll") != std::string::npos;
}

void PrintReport(std::ostream& log, const std::string& model,
                 const metrics::MetricReport& r) {
  log << model << ":";
  for (const auto& name : metrics::MetricReport::MetricNames()) {
    log << ' ' << name << '=' << FormatOptional(r.Get(name), 4);
  }
  log << '\n';
}

}  // namespace

ExperimentConfig ResolveConfig(const CommandOptions& options) {
  IniDocument doc;
  if (options.config_path.empty()) {
    doc.source = "<defaults>";
  } else {
    doc = LoadIniFile(options.config_path);
  }
  for (const auto& o : options.overrides) ApplyOverride(doc, o);
  ExperimentConfig config = ExperimentConfig::FromDocument(doc);
  if (options.seed) config.run.seed = *options.seed;
  if (options.out) config.run.output_dir = *options.out;
  if (options.n_seeds) {
    if (*options.n_seeds < 1) throw UsageError("--n-seeds must be >= 1");
    config.run.repetitions = *options.n_seeds;
  }
  if (options.jobs) {
    if (*options.jobs < 1) throw UsageError("--jobs must be >= 1");
    config.run.jobs = *options.jobs;
  }
  config.Validate();
  return config;
}

RunManifest::RunManifest(std::string command, const ExperimentConfig& config)
    : command_(std::move(command)), config_ini_(config.ToIni()) {}

void RunManifest::AddSeed(const std::string& name, std::uint64_t value) {
  seeds_.emplace_back(name, value);
}

void RunManifest::AddArtifact(const std::string& kind,
                              const std::string& path) {
  artifacts_.emplace_back(kind, path);
}

void RunManifest::AddTiming(const std::string& name, double seconds) {
  timings_.emplace_back(name, seconds);
}

void RunManifest::AddNote(const std::string& note) { notes_.push_back(note); }

void RunManifest::Write(const std::string& path) const {
  std::ostringstream out;
  out << "command " << command_ << '\n';
  for (const auto& [name, v] : seeds_) out << "seed " << name << ' ' << v << '\n';
  for (const auto& [kind, p] : artifacts_) {
    if (!fs::exists(p)) {
      throw PipelineError("artifact '" + p + "' (" + kind + ") was not written");
    }
    out << "artifact " << kind << ' ' << p << '\n';
  }
  for (const auto& [name, s] : timings_) {
    out << "timing " << name << ' ' << FormatSig(s, 4) << "s\n";
  }
  for (const auto& n : notes_) out << "note " << n << '\n';
  out << "config-begin\n" << config_ini_ << "config-end\n";
  WriteText(path, out.str());
}

std::string ComparisonTable::CsvHeader() {
  return "model,metric,mean,std,n,rank";
}

std::string ComparisonTable::ToCsv() const {
  std::string out = CsvHeader() + "\n";
  auto opt = [](const std::optional<double>& v) {
    return v ? FormatExact(*v) : std::string("absent");
  };
  for (const auto& r : rows) {
    out += r.model + "," + r.metric + "," + opt(r.mean) + "," + opt(r.spread) +
           "," + std::to_string(r.n) + "," + r.rank + "\n";
  }
  return out;
}

ComparisonTable ComparisonTable::FromCsv(const std::string& text) {
  ComparisonTable t;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1) {
      if (line != CsvHeader()) throw ParseError("comparison csv: bad header");
      continue;
    }
    if (line.empty()) continue;
    auto fail = [&](const std::string& what) {
      return ParseError("comparison csv line " + std::to_string(line_no) +
                        ": " + what);
    };
    auto cols = Split(line, ',');
    if (cols.size() != 6) throw fail("expected 6 columns");
    auto opt = [&](std::string_view v) -> std::optional<double> {
      if (v == "absent") return std::nullopt;
      auto d = ParseDouble(v);
      if (!d) throw fail("bad number '" + std::string(v) + "'");
      return d;
    };
    ComparisonRow r;
    r.model = std::string(cols[0]);
    r.metric = std::string(cols[1]);
    r.mean = opt(cols[2]);
    r.spread = opt(cols[3]);
    auto n = ParseInt(cols[4]);
    if (!n) throw fail("bad count");
    r.n = static_cast<int>(*n);
    r.rank = std::string(cols[5]);
    if (!r.rank.empty() && r.rank != "best" && r.rank != "second") {
      throw fail("bad rank '" + r.rank + "'");
    }
    t.rows.push_back(std::move(r));
  }
  return t;
}

const ComparisonRow* ComparisonTable::Find(const std::string& model,
                                           const std::string& metric) const {
  for (const auto& r : rows) {
    if (r.model == model && r.metric == metric) return &r;
  }
  return nullptr;
}

ComparisonTable BuildComparison(const std::vector<RunRecord>& runs) {
  std::vector<std::string> models;
  for (const auto& r : runs) {
    if (std::find(models.begin(), models.end(), r.model) == models.end()) {
      models.push_back(r.model);
    }
  }
  ComparisonTable table;
  for (const auto& model : models) {
    for (const auto& metric : metrics::MetricReport::MetricNames()) {
      std::vector<double> values;
      for (const auto& r : runs) {
        if (r.model != model) continue;
        if (auto v = r.report.Get(metric)) values.push_back(*v);
      }
      ComparisonRow row;
      row.model = model;
      row.metric = metric;
      row.n = static_cast<int>(values.size());
      if (!values.empty()) {
        double sum = 0.0;
        for (double v : values) sum += v;
        double mean = sum / static_cast<double>(values.size());
        double ss = 0.0;
        for (double v : values) ss += (v - mean) * (v - mean);
        row.mean = mean;
        row.spread = values.size() > 1
                         ? std::sqrt(ss / static_cast<double>(values.size() - 1))
                         : 0.0;
      }
      table.rows.push_back(std::move(row));
    }
  }
  // Best / second-best per metric among models with a value.
  for (const auto& metric : metrics::MetricReport::MetricNames()) {
    std::vector<ComparisonRow*> ranked;
    for (auto& row : table.rows) {
      if (row.metric == metric && row.mean) ranked.push_back(&row);
    }
    bool lower = LowerIsBetter(metric);
    std::stable_sort(ranked.begin(), ranked.end(),
                     [lower](const ComparisonRow* a, const ComparisonRow* b) {
                       return lower ? *a->mean < *b->mean : *a->mean > *b->mean;
                     });
    if (ranked.size() >= 1) ranked[0]->rank = "best";
    if (ranked.size() >= 2) ranked[1]->rank = "second";
  }
  return table;
}

void CmdGenerate(const CommandOptions& options, std::ostream& log) {
  Stopwatch total;
  ExperimentConfig config = ResolveConfig(options);
  if (config.data.source != "synthetic") {
    throw ConfigError("generate needs data.source = synthetic");
  }
  std::string dir = PrepareOutputDir(config);
  RunManifest manifest("generate", config);
  Experiment exp(config, config.run.seed, 0);
  manifest.AddSeed("data", exp.Seed("data"));
  const PreparedData& d = exp.Data();
  std::string dataset_path = Join(dir, "dataset.csv");
  std::string oracle_path = Join(dir, "oracle.txt");
  data::WriteLogFile(d.full, dataset_path);
  d.oracle->Save(oracle_path);
  manifest.AddArtifact("dataset", dataset_path);
  manifest.AddArtifact("oracle", oracle_path);
  manifest.AddTiming("total", total.Seconds());
  manifest.Write(Join(dir, "manifest.txt"));
  log << "generated " << d.full.size() << " impressions ("
      << d.full.CountClicked() << " clicked) into " << dir << '\n';
}

void CmdTrain(const CommandOptions& options, std::ostream& log) {
  Stopwatch total;
  if (options.model.empty()) throw UsageError("train needs --model");
  CheckModelName(options.model);
  if (!options.pseudo_labels.empty() && options.model != "ukd" &&
      options.model != "ukd-base") {
    throw UsageError("--pseudo-labels only applies to ukd and ukd-base");
  }
  ExperimentConfig config = ResolveConfig(options);
  std::string dir = PrepareOutputDir(config);
  RunManifest manifest("train " + options.model, config);
  Experiment exp(config, config.run.seed, 0);
  manifest.AddSeed("data", exp.Seed("data"));
  manifest.AddSeed("ctr-reference", exp.Seed("ctr-reference"));

  Stopwatch stage;
  exp.Data();
  manifest.AddTiming("data", stage.Seconds());
  stage = Stopwatch();
  std::string ref_path = Join(dir, "ctr_reference.ckpt");
  exp.ReferenceCtr().Save(ref_path);
  manifest.AddArtifact("checkpoint", ref_path);
  manifest.AddTiming("ctr-reference", stage.Seconds());

  const bool uses_teacher =
      options.model == "teacher" ||
      ((options.model == "ukd" || options.model == "ukd-base") &&
       options.pseudo_labels.empty());
  if (uses_teacher) {
    stage = Stopwatch();
    manifest.AddSeed("teacher", exp.Seed("teacher"));
    std::string teacher_path = Join(dir, "teacher.ckpt");
    exp.Teacher().Save(teacher_path);
    std::string labels_path = Join(dir, "pseudo_labels.csv");
    if (config.teacher.pseudo_labels == "mc-dropout") {
      manifest.AddSeed("mc-dropout", exp.Seed("mc-dropout"));
    }
    teacher::WritePseudoLabels(labels_path, exp.PseudoLabels());
    manifest.AddArtifact("checkpoint", teacher_path);
    manifest.AddArtifact("pseudo-labels", labels_path);
    manifest.AddTiming("teacher", stage.Seconds());
  }

  stage = Stopwatch();
  if (options.model != "teacher") manifest.AddSeed(options.model, exp.Seed(options.model));
  ModelResult result = exp.Train(options.model, options.pseudo_labels);
  manifest.AddTiming(options.model, stage.Seconds());
  for (const auto& w : result.warnings) {
    manifest.AddNote("warning: " + w);
    log << "warning: " << w << '\n';
  }
  if (options.model != "teacher") {
    std::string ckpt = Join(dir, options.model + ".ckpt");
    result.save_checkpoint(ckpt);
    manifest.AddArtifact("checkpoint", ckpt);
  }
  std::string report_path = Join(dir, "report_" + options.model + ".txt");
  WriteText(report_path, result.report.ToKeyValue());
  std::string csv_path = Join(dir, "report_" + options.model + ".csv");
  WriteText(csv_path, metrics::MetricReport::CsvHeader() + "\n" +
                          result.report.CsvRow(options.model, "test") + "\n");
  manifest.AddArtifact("report", report_path);
  manifest.AddArtifact("report", csv_path);
  if (!result.history.epoch_loss.empty()) {
    std::string hist = Join(dir, "history_" + options.model + ".csv");
    WriteText(hist, HistoryCsv(result.history));
    manifest.AddArtifact("history", hist);
  }
  manifest.AddTiming("total", total.Seconds());
  manifest.Write(Join(dir, "manifest.txt"));
  PrintReport(log, options.model, result.report);
}

void CmdCompare(const CommandOptions& options, std::ostream& log) {
  Stopwatch total;
  ExperimentConfig config = ResolveConfig(options);
  std::vector<std::string> models =
      options.models.empty() ? config.run.models : options.models;
  if (models.size() < 2) throw UsageError("compare needs at least two models");
  for (const auto& m : models) CheckModelName(m);
  std::string dir = PrepareOutputDir(config);
  RunManifest manifest("compare", config);
  const int reps = config.run.repetitions;
  std::vector<std::vector<RunRecord>> per_rep(static_cast<std::size_t>(reps));
  std::vector<std::vector<std::string>> notes(static_cast<std::size_t>(reps));
  ParallelFor(static_cast<std::size_t>(reps), config.run.jobs,
              [&](std::size_t rep) {
                Experiment exp(config, config.run.seed, static_cast<int>(rep));
                for (const auto& m : models) {
                  ModelResult r = exp.Train(m);
                  per_rep[rep].push_back({m, static_cast<int>(rep), r.report});
                  for (auto& w : r.warnings) notes[rep].push_back(w);
                }
              });
  std::vector<RunRecord> runs;
  std::string runs_csv = "repetition," + metrics::MetricReport::CsvHeader() + "\n";
  for (int rep = 0; rep < reps; ++rep) {
    Experiment seeds(config, config.run.seed, rep);
    manifest.AddSeed("data/" + std::to_string(rep), seeds.Seed("data"));
    for (auto& r : per_rep[static_cast<std::size_t>(rep)]) {
      runs_csv += std::to_string(rep) + "," + r.report.CsvRow(r.model, "test") + "\n";
      runs.push_back(r);
    }
    for (auto& n : notes[static_cast<std::size_t>(rep)]) manifest.AddNote(n);
  }
  ComparisonTable table = BuildComparison(runs);
  std::string runs_path = Join(dir, "compare_runs.csv");
  std::string table_path = Join(dir, "compare.csv");
  WriteText(runs_path, runs_csv);
  WriteText(table_path, table.ToCsv());
  manifest.AddArtifact("table", runs_path);
  manifest.AddArtifact("table", table_path);
  manifest.AddTiming("total", total.Seconds());
  manifest.Write(Join(dir, "manifest.txt"));
  for (const auto& row : table.rows) {
    log << row.model << ' ' << row.metric << ' ' << FormatOptional(row.mean, 4)
        << " +- " << FormatOptional(row.spread, 2)
        << (row.rank.empty() ? "" : " [" + row.rank + "]") << '\n';
  }
}

void CmdSweep(const CommandOptions& options, std::ostream& log) {
  Stopwatch total;
  ExperimentConfig config = ResolveConfig(options);
  for (const auto& m : config.sweep.models) CheckModelName(m);
  std::string dir = PrepareOutputDir(config);
  RunManifest manifest("sweep " + config.sweep.parameter, config);
  struct Cell {
    double value;
    int rep;
  };
  std::vector<Cell> cells;
  for (double v : config.sweep.values) {
    for (int rep = 0; rep < config.run.repetitions; ++rep) cells.push_back({v, rep});
  }
  std::vector<std::string> rows(cells.size());
  ParallelFor(cells.size(), config.run.jobs, [&](std::size_t i) {
    ExperimentConfig cell = config;
    const std::string& p = config.sweep.parameter;
    double v = cells[i].value;
    if (p == "unclick_ratio") cell.teacher.unclick_ratio = v;
    else if (p == "dropout_rate") cell.student.dropout_rate = v;
    else if (p == "alpha") cell.student.alpha = v;
    else if (p == "lambda") cell.student.lambda = v;
    else if (p == "gamma") cell.student.gamma = v;
    cell.Validate();
    Experiment exp(cell, config.run.seed, cells[i].rep);
    for (const auto& m : config.sweep.models) {
      ModelResult r = exp.Train(m);
      rows[i] += p + "," + FormatExact(v) + "," + std::to_string(cells[i].rep) +
                 "," + r.report.CsvRow(m, "test") + "\n";
    }
  });
  std::string csv = "parameter,value,repetition," +
                    metrics::MetricReport::CsvHeader() + "\n";
  for (const auto& r : rows) csv += r;
  std::string path = Join(dir, "sweep.csv");
  WriteText(path, csv);
  manifest.AddArtifact("table", path);
  manifest.AddTiming("total", total.Seconds());
  manifest.Write(Join(dir, "manifest.txt"));
  log << "sweep over " << config.sweep.parameter << ": " << cells.size()
      << " cells x " << config.sweep.models.size() << " models -> " << path
      << '\n';
}

void CmdNoiseExperiment(const CommandOptions& options, std::ostream& log) {
  Stopwatch total;
  ExperimentConfig config = ResolveConfig(options);
  std::string dir = PrepareOutputDir(config);
  RunManifest manifest("noise-exp", config);
  Experiment exp(config, config.run.seed, 0);
  manifest.AddSeed("data", exp.Seed("data"));
  data::Dataset d_click = exp.Data().train_click.clicked;
  if (config.noise.max_clicked > 0 && d_click.size() > config.noise.max_clicked) {
    d_click.records.resize(config.noise.max_clicked);
  }
  student::NoiseExperimentConfig nc;
  nc.k_values = config.noise.k_values;
  nc.seeds.clear();
  for (int r = 0; r < config.run.repetitions; ++r) {
    nc.seeds.push_back(DeriveSeed(config.run.seed, "noise",
                                  static_cast<std::uint64_t>(r)));
  }
  nc.model = config.MakeNoiseModelConfig();
  std::vector<student::NoiseRow> rows =
      student::NoiseIdentificationExperiment(d_click, nc, config.run.jobs);
  std::string csv = student::NoiseCsvHeader() + "\n";
  for (const auto& r : rows) csv += student::NoiseCsvRow(r) + "\n";
  std::ostringstream summary;
  for (double k : nc.k_values) {
    int wins = 0, total_rows = 0;
    bool absent = false;
    for (const auto& r : rows) {
      if (r.k != k) continue;
      ++total_rows;
      if (!r.mean_kl_noisy) {
        absent = true;
        continue;
      }
      if (r.mean_kl_clean && *r.mean_kl_noisy > *r.mean_kl_clean) ++wins;
    }
    summary << "k=" << FormatExact(k) << ": ";
    if (absent) {
      summary << "absent-noisy\n";
    } else {
      summary << "noisy > clean in " << wins << "/" << total_rows << " seeds\n";
    }
  }
  std::string csv_path = Join(dir, "noise.csv");
  std::string summary_path = Join(dir, "noise_summary.txt");
  WriteText(csv_path, csv);
  WriteText(summary_path, summary.str());
  manifest.AddArtifact("table", csv_path);
  manifest.AddArtifact("summary", summary_path);
  manifest.AddTiming("total", total.Seconds());
  manifest.Write(Join(dir, "manifest.txt"));
  log << summary.str();
}

}  // namespace ukd::harness

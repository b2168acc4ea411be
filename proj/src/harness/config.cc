#include "ukd/harness/config.h"

#include <fstream>
#include <algorithm>
#include <functional>
#include <sstream>

#include "ukd/common/errors.h"
#include "ukd/common/text.h"

namespace ukd::harness {

namespace {

bool ValidName(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s) {
    bool ok = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
    if (!ok) return false;
  }
  return true;
}

// One config key: how to read it from text and write it back.
struct Binding {
  std::string section;
  std::string key;
  std::function<void(const std::string&)> parse;  // throws std::string
  std::function<std::string()> format;
};

double ToDouble(const std::string& v) {
  auto d = ParseDouble(v);
  if (!d) throw std::string("expected a number, got '" + v + "'");
  return *d;
}

std::int64_t ToInt(const std::string& v) {
  auto i = ParseInt(v);
  if (!i) throw std::string("expected an integer, got '" + v + "'");
  return *i;
}

std::int64_t ToNonNegative(const std::string& v) {
  std::int64_t i = ToInt(v);
  if (i < 0) throw std::string("expected a non-negative integer, got '" + v + "'");
  return i;
}

bool ToBool(const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw std::string("expected true or false, got '" + v + "'");
}

std::vector<std::string> ToList(const std::string& v) {
  std::vector<std::string> out;
  if (Trim(v).empty()) return out;
  for (auto part : Split(v, ',')) {
    auto t = Trim(part);
    if (t.empty()) throw std::string("empty list element in '" + v + "'");
    out.emplace_back(t);
  }
  return out;
}

template <typename T, typename F>
std::vector<T> MapList(const std::string& v, F f) {
  std::vector<T> out;
  for (const auto& s : ToList(v)) out.push_back(f(s));
  return out;
}

template <typename T>
std::string JoinList(const std::vector<T>& v,
                     const std::function<std::string(const T&)>& f) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += f(v[i]);
  }
  return out;
}

std::string Num(double v) { return FormatExact(v); }

Binding Double(const char* s, const char* k, double& ref) {
  return {s, k, [&ref](const std::string& v) { ref = ToDouble(v); },
          [&ref] { return Num(ref); }};
}

template <typename Int>
Binding Integer(const char* s, const char* k, Int& ref, bool non_negative) {
  return {s, k,
          [&ref, non_negative](const std::string& v) {
            ref = static_cast<Int>(non_negative ? ToNonNegative(v) : ToInt(v));
          },
          [&ref] { return std::to_string(ref); }};
}

Binding Bool(const char* s, const char* k, bool& ref) {
  return {s, k, [&ref](const std::string& v) { ref = ToBool(v); },
          [&ref] { return std::string(ref ? "true" : "false"); }};
}

Binding String(const char* s, const char* k, std::string& ref) {
  return {s, k, [&ref](const std::string& v) { ref = v; },
          [&ref] { return ref; }};
}

Binding Sizes(const char* s, const char* k, std::vector<std::size_t>& ref) {
  return {s, k,
          [&ref](const std::string& v) {
            ref = MapList<std::size_t>(v, [](const std::string& e) {
              std::int64_t i = ToInt(e);
              if (i <= 0) throw std::string("widths must be positive");
              return static_cast<std::size_t>(i);
            });
          },
          [&ref] {
            return JoinList<std::size_t>(
                ref, [](const std::size_t& x) { return std::to_string(x); });
          }};
}

Binding Cards(const char* s, const char* k, std::vector<std::uint32_t>& ref) {
  return {s, k,
          [&ref](const std::string& v) {
            ref = MapList<std::uint32_t>(v, [](const std::string& e) {
              std::int64_t i = ToInt(e);
              if (i < 0 || i > 0xFFFFFFFFLL) {
                throw std::string("cardinality out of range");
              }
              return static_cast<std::uint32_t>(i);
            });
          },
          [&ref] {
            return JoinList<std::uint32_t>(
                ref, [](const std::uint32_t& x) { return std::to_string(x); });
          }};
}

Binding Doubles(const char* s, const char* k, std::vector<double>& ref) {
  return {s, k, [&ref](const std::string& v) { ref = MapList<double>(v, ToDouble); },
          [&ref] {
            return JoinList<double>(ref, [](const double& x) { return Num(x); });
          }};
}

Binding Strings(const char* s, const char* k, std::vector<std::string>& ref) {
  return {s, k, [&ref](const std::string& v) { ref = ToList(v); },
          [&ref] {
            return JoinList<std::string>(ref,
                                         [](const std::string& x) { return x; });
          }};
}

std::vector<Binding> Bindings(ExperimentConfig& c) {
  auto& g = c.data.generator;
  return {
      String("data", "source", c.data.source),
      String("data", "log_path", c.data.log_path),
      String("data", "oracle_path", c.data.oracle_path),
      Integer("data", "n_impressions", g.n_impressions, true),
      Integer("data", "n_fields", g.n_fields, true),
      Cards("data", "cardinalities", g.cardinalities),
      Double("data", "ctr_cvr_correlation", g.ctr_cvr_correlation),
      Double("data", "base_ctr", g.base_ctr),
      Double("data", "base_cvr", g.base_cvr),
      Double("data", "ctr_weight_scale", g.ctr_weight_scale),
      Double("data", "cvr_weight_scale", g.cvr_weight_scale),
      Double("data", "zipf_exponent", g.zipf_exponent),
      Integer("data", "n_days", c.data.n_days, true),

      Integer("model", "embedding_dim", c.model.embedding_dim, true),
      Sizes("model", "learner_widths", c.model.learner_widths),
      Sizes("model", "predictor_widths", c.model.predictor_widths),
      Sizes("model", "discriminator_widths", c.model.discriminator_widths),
      Double("model", "learning_rate", c.model.learning_rate),
      Integer("model", "batch_size", c.model.batch_size, true),
      Integer("model", "epochs", c.model.epochs, true),
      Integer("model", "ctr_epochs", c.model.ctr_epochs, true),
      Double("model", "gamma", c.model.gamma),
      Double("model", "propensity_clip", c.model.propensity_clip),
      Double("model", "reversal_scale", c.model.reversal_scale),
      Double("model", "domain_weight", c.model.domain_weight),

      Integer("teacher", "epochs", c.teacher.epochs, true),
      Double("teacher", "unclick_ratio", c.teacher.unclick_ratio),
      Double("teacher", "domain_weight", c.teacher.domain_weight),
      Double("teacher", "reversal_scale", c.teacher.reversal_scale),
      Bool("teacher", "adversarial", c.teacher.adversarial),
      String("teacher", "pseudo_labels", c.teacher.pseudo_labels),
      Integer("teacher", "mc_passes", c.teacher.mc_passes, true),
      Double("teacher", "mc_dropout_rate", c.teacher.mc_dropout_rate),
      Double("teacher", "mc_retain", c.teacher.mc_retain),

      Double("student", "alpha", c.student.alpha),
      Double("student", "gamma", c.student.gamma),
      Double("student", "lambda", c.student.lambda),
      Double("student", "dropout_rate", c.student.dropout_rate),
      Integer("student", "epochs", c.student.epochs, true),

      String("sweep", "parameter", c.sweep.parameter),
      Doubles("sweep", "values", c.sweep.values),
      Strings("sweep", "models", c.sweep.models),

      Doubles("noise", "k_values", c.noise.k_values),
      Integer("noise", "epochs", c.noise.epochs, true),
      Double("noise", "dropout_rate", c.noise.dropout_rate),
      Integer("noise", "max_clicked", c.noise.max_clicked, true),

      Integer("run", "seed", c.run.seed, true),
      Integer("run", "repetitions", c.run.repetitions, true),
      String("run", "output_dir", c.run.output_dir),
      Integer("run", "jobs", c.run.jobs, true),
      Strings("run", "models", c.run.models),
  };
}

std::string Location(const std::string& source, int line) {
  return line > 0 ? source + ":" + std::to_string(line) : source;
}

}  // namespace

void IniDocument::Set(const std::string& section, const std::string& key,
                      const std::string& value, int line) {
  sections[section][key] = IniEntry{value, line};
}

IniDocument ParseIni(const std::string& text, const std::string& source) {
  IniDocument doc;
  doc.source = source;
  std::istringstream in(text);
  std::string raw;
  std::string section;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    auto fail = [&](const std::string& what) {
      return ConfigError(Location(source, line_no) + ": " + what);
    };
    std::string_view line = raw;
    if (auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = Trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw fail("unterminated section header");
      std::string name(Trim(line.substr(1, line.size() - 2)));
      if (!ValidName(name)) throw fail("bad section name '" + name + "'");
      section = name;
      doc.sections[section];
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string_view::npos) throw fail("expected 'key = value'");
    if (section.empty()) throw fail("key outside of any section");
    std::string key(Trim(line.substr(0, eq)));
    std::string value(Trim(line.substr(eq + 1)));
    if (!ValidName(key)) throw fail("bad key name '" + key + "'");
    auto& keys = doc.sections[section];
    if (keys.count(key)) {
      throw fail("duplicate key '" + key + "' in [" + section + "] (first at line " +
                 std::to_string(keys[key].line) + ")");
    }
    keys[key] = IniEntry{value, line_no};
  }
  return doc;
}

IniDocument LoadIniFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read config '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return ParseIni(buf.str(), path);
}

void ApplyOverride(IniDocument& doc, const std::string& assignment) {
  auto eq = assignment.find('=');
  auto dot = assignment.find('.');
  if (eq == std::string::npos || dot == std::string::npos || dot > eq) {
    throw UsageError("override must look like section.key=value, got '" +
                     assignment + "'");
  }
  std::string section(Trim(std::string_view(assignment).substr(0, dot)));
  std::string key(
      Trim(std::string_view(assignment).substr(dot + 1, eq - dot - 1)));
  std::string value(Trim(std::string_view(assignment).substr(eq + 1)));
  if (!ValidName(section) || !ValidName(key)) {
    throw UsageError("bad override name in '" + assignment + "'");
  }
  doc.Set(section, key, value, 0);
}

ExperimentConfig ExperimentConfig::FromDocument(const IniDocument& doc) {
  ExperimentConfig c;
  std::vector<Binding> bindings = Bindings(c);
  for (const auto& [section, keys] : doc.sections) {
    for (const auto& [key, entry] : keys) {
      const Binding* match = nullptr;
      bool known_section = false;
      for (const auto& b : bindings) {
        if (b.section != section) continue;
        known_section = true;
        if (b.key == key) match = &b;
      }
      std::string where = Location(doc.source, entry.line);
      if (!known_section) {
        throw ConfigError(where + ": unknown section [" + section + "]");
      }
      if (!match) {
        throw ConfigError(where + ": unknown key '" + key + "' in [" +
                          section + "]");
      }
      try {
        match->parse(entry.value);
      } catch (const std::string& what) {
        throw ConfigError(where + ": " + section + "." + key + ": " + what);
      }
    }
  }
  try {
    c.Validate();
  } catch (const Error& e) {
    throw ConfigError(doc.source + ": " + e.what());
  }
  return c;
}

ExperimentConfig ExperimentConfig::Load(const std::string& path) {
  return FromDocument(LoadIniFile(path));
}

std::string ExperimentConfig::ToIni() const {
  ExperimentConfig copy = *this;
  std::string out;
  std::string section;
  for (const auto& b : Bindings(copy)) {
    if (b.section != section) {
      if (!section.empty()) out += '\n';
      section = b.section;
      out += "[" + section + "]\n";
    }
    out += b.key + " = " + b.format() + '\n';
  }
  return out;
}

void ExperimentConfig::Validate() const {
  if (data.source == "synthetic") {
    data.generator.Validate();
  } else if (data.source == "log") {
    if (data.log_path.empty()) {
      throw ConfigError("data.source = log requires data.log_path");
    }
  } else {
    throw ConfigError("data.source must be synthetic or log");
  }
  if (data.n_days < 3) throw ConfigError("data.n_days must be >= 3");
  MakeBaselineSpec(baselines::ModelKind::kJoint).Validate();
  MakeTeacherConfig().Validate();
  MakeStudentConfig(student::Variant::kUncertainty).Validate();
  if (teacher.pseudo_labels != "plain" && teacher.pseudo_labels != "mc-dropout") {
    throw ConfigError("teacher.pseudo_labels must be plain or mc-dropout");
  }
  if (teacher.mc_passes < 2) throw ConfigError("teacher.mc_passes must be >= 2");
  if (!(teacher.mc_dropout_rate >= 0.0 && teacher.mc_dropout_rate < 1.0)) {
    throw ConfigError("teacher.mc_dropout_rate must lie in [0, 1)");
  }
  if (!(teacher.mc_retain >= 0.0 && teacher.mc_retain <= 1.0)) {
    throw ConfigError("teacher.mc_retain must lie in [0, 1]");
  }
  if (sweep.values.empty()) throw ConfigError("sweep.values must be nonempty");
  if (sweep.models.empty()) throw ConfigError("sweep.models must be nonempty");
  static const char* kSweepable[] = {"unclick_ratio", "dropout_rate", "alpha",
                                     "lambda", "gamma"};
  if (std::find(std::begin(kSweepable), std::end(kSweepable),
                sweep.parameter) == std::end(kSweepable)) {
    throw ConfigError("sweep.parameter must be one of unclick_ratio, "
                      "dropout_rate, alpha, lambda, gamma");
  }
  if (noise.k_values.empty()) throw ConfigError("noise.k_values must be nonempty");
  for (double k : noise.k_values) {
    if (!(k >= 0.0 && k <= 100.0)) {
      throw ConfigError("noise.k_values must lie in [0, 100]");
    }
  }
  if (!(noise.dropout_rate >= 0.0 && noise.dropout_rate < 1.0)) {
    throw ConfigError("noise.dropout_rate must lie in [0, 1)");
  }
  if (run.repetitions < 1) throw ConfigError("run.repetitions must be >= 1");
  if (run.jobs < 1) throw ConfigError("run.jobs must be >= 1");
  if (run.output_dir.empty()) throw ConfigError("run.output_dir is empty");
}

baselines::ModelSpec ExperimentConfig::MakeBaselineSpec(
    baselines::ModelKind kind) const {
  baselines::ModelSpec s;
  s.kind = kind;
  s.gamma = model.gamma;
  s.learning_rate = model.learning_rate;
  s.embedding_dim = model.embedding_dim;
  s.learner_widths = model.learner_widths;
  s.predictor_widths = model.predictor_widths;
  s.discriminator_widths = model.discriminator_widths;
  s.batch_size = model.batch_size;
  s.epochs = kind == baselines::ModelKind::kCtrReference ? model.ctr_epochs
                                                          : model.epochs;
  s.propensity_clip = model.propensity_clip;
  s.reversal_scale = model.reversal_scale;
  s.domain_weight = model.domain_weight;
  return s;
}

teacher::TeacherConfig ExperimentConfig::MakeTeacherConfig() const {
  teacher::TeacherConfig t;
  t.embedding_dim = model.embedding_dim;
  t.learner_widths = model.learner_widths;
  t.predictor_widths = model.predictor_widths;
  t.discriminator_widths = model.discriminator_widths;
  t.learning_rate = model.learning_rate;
  t.batch_size = model.batch_size;
  t.epochs = teacher.epochs;
  t.domain_weight = teacher.domain_weight;
  t.reversal_scale = teacher.reversal_scale;
  t.unclick_ratio = teacher.unclick_ratio;
  t.adversarial = teacher.adversarial;
  return t;
}

student::StudentConfig ExperimentConfig::MakeStudentConfig(
    student::Variant variant) const {
  student::StudentConfig s;
  s.variant = variant;
  s.alpha = student.alpha;
  s.gamma = student.gamma;
  s.lambda = student.lambda;
  s.dropout_rate = student.dropout_rate;
  s.embedding_dim = model.embedding_dim;
  s.learner_widths = model.learner_widths;
  s.predictor_widths = model.predictor_widths;
  s.learning_rate = model.learning_rate;
  s.batch_size = model.batch_size;
  s.epochs = student.epochs;
  return s;
}

student::StudentConfig ExperimentConfig::MakeNoiseModelConfig() const {
  student::StudentConfig s = MakeStudentConfig(student::Variant::kUncertainty);
  s.ctr_tower = false;
  s.dropout_rate = noise.dropout_rate;
  s.epochs = noise.epochs;
  return s;
}

}  // namespace ukd::harness

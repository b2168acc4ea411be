#include "ukd/data/synthetic.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "ukd/common/errors.h"
#include "ukd/common/random.h"
#include "ukd/common/text.h"

namespace ukd::data {

double Sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

void GeneratorConfig::Validate() const {
  if (n_impressions < 1) throw ConfigError("n_impressions must be >= 1");
  if (n_fields < 1) throw ConfigError("n_fields must be >= 1");
  if (cardinalities.size() != 1 && cardinalities.size() != n_fields) {
    throw ConfigError("cardinalities must have 1 or n_fields entries");
  }
  for (std::uint32_t c : cardinalities) {
    if (c == 0) throw ConfigError("field cardinality must be positive");
  }
  if (!(ctr_cvr_correlation >= -1.0 && ctr_cvr_correlation <= 1.0)) {
    throw ConfigError("ctr_cvr_correlation must lie in [-1, 1]");
  }
  if (!(base_ctr > 0.0 && base_ctr < 1.0)) {
    throw ConfigError("base_ctr must lie in (0, 1)");
  }
  if (!(base_cvr > 0.0 && base_cvr < 1.0)) {
    throw ConfigError("base_cvr must lie in (0, 1)");
  }
  if (!(ctr_weight_scale >= 0.0) || !(cvr_weight_scale >= 0.0)) {
    throw ConfigError("weight scales must be non-negative");
  }
  if (!(zipf_exponent >= 0.0)) throw ConfigError("zipf_exponent must be >= 0");
}

std::vector<std::uint32_t> GeneratorConfig::ResolvedCardinalities() const {
  if (cardinalities.size() == 1) {
    return std::vector<std::uint32_t>(n_fields, cardinalities[0]);
  }
  return cardinalities;
}

namespace {

double LogitOf(const std::vector<std::vector<double>>& weights,
               double intercept, const ImpressionRecord& r) {
  double z = intercept;
  for (std::size_t f = 0; f < r.categories.size() && f < weights.size(); ++f) {
    if (r.categories[f] < weights[f].size()) z += weights[f][r.categories[f]];
  }
  return z;
}

// Intercept b with mean(sigmoid(b + offsets)) == target, by bisection.
double CalibrateIntercept(const std::vector<double>& offsets, double target) {
  double lo = -40.0;
  double hi = 40.0;
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    double mean = 0.0;
    for (double o : offsets) mean += Sigmoid(mid + o);
    mean /= static_cast<double>(offsets.size());
    (mean < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

double OracleWorld::CtrLogit(const ImpressionRecord& r) const {
  return LogitOf(ctr_weights, ctr_intercept, r);
}
double OracleWorld::CvrLogit(const ImpressionRecord& r) const {
  return LogitOf(cvr_weights, cvr_intercept, r);
}
double OracleWorld::TrueCtr(const ImpressionRecord& r) const {
  return Sigmoid(CtrLogit(r));
}
double OracleWorld::TrueCvr(const ImpressionRecord& r) const {
  return Sigmoid(CvrLogit(r));
}

bool OracleWorld::Owns(const ImpressionRecord& r) const {
  if (r.sample_id < 0 ||
      static_cast<std::size_t>(r.sample_id) >= record_hashes.size()) {
    return false;
  }
  return record_hashes[static_cast<std::size_t>(r.sample_id)] == RecordHash(r);
}

std::uint64_t RecordHash(const ImpressionRecord& r) {
  std::uint64_t h = MixBits(static_cast<std::uint64_t>(r.sample_id));
  for (std::uint32_t c : r.categories) h = MixBits(h ^ c);
  return h;
}

SyntheticWorld GenerateSynthetic(const GeneratorConfig& config) {
  config.Validate();
  const auto cards = config.ResolvedCardinalities();
  const std::size_t n_fields = cards.size();
  SyntheticWorld world;
  OracleWorld& oracle = world.oracle;
  oracle.config = config;

  // Latent weights: CVR shares the CTR direction with the configured
  // correlation, so clicking selects for higher (or lower) conversion.
  Rng weight_rng(DeriveSeed(config.seed, "oracle-weights"));
  std::normal_distribution<double> normal(0.0, 1.0);
  const double rho = config.ctr_cvr_correlation;
  const double rho_perp = std::sqrt(std::max(0.0, 1.0 - rho * rho));
  oracle.ctr_weights.resize(n_fields);
  oracle.cvr_weights.resize(n_fields);
  for (std::size_t f = 0; f < n_fields; ++f) {
    oracle.ctr_weights[f].resize(cards[f]);
    oracle.cvr_weights[f].resize(cards[f]);
    for (std::uint32_t c = 0; c < cards[f]; ++c) {
      double u = normal(weight_rng);
      double v = normal(weight_rng);
      oracle.ctr_weights[f][c] = config.ctr_weight_scale * u;
      oracle.cvr_weights[f][c] = config.cvr_weight_scale * (rho * u + rho_perp * v);
    }
  }

  // Zipf popularity over a random permutation of each field's categories.
  Rng feature_rng(DeriveSeed(config.seed, "features"));
  std::vector<std::discrete_distribution<std::uint32_t>> pickers;
  std::vector<std::vector<std::uint32_t>> perms;
  for (std::size_t f = 0; f < n_fields; ++f) {
    std::vector<double> w(cards[f]);
    for (std::uint32_t k = 0; k < cards[f]; ++k) {
      w[k] = std::pow(static_cast<double>(k + 1), -config.zipf_exponent);
    }
    pickers.emplace_back(w.begin(), w.end());
    std::vector<std::uint32_t> perm(cards[f]);
    std::iota(perm.begin(), perm.end(), 0u);
    std::shuffle(perm.begin(), perm.end(), feature_rng);
    perms.push_back(std::move(perm));
  }

  Dataset& ds = world.dataset;
  ds.cardinalities = cards;
  const auto n = static_cast<std::size_t>(config.n_impressions);
  ds.records.resize(n);
  std::vector<double> ctr_offsets(n);
  std::vector<double> cvr_offsets(n);
  for (std::size_t i = 0; i < n; ++i) {
    ImpressionRecord& r = ds.records[i];
    r.sample_id = static_cast<std::int64_t>(i);
    r.categories.resize(n_fields);
    for (std::size_t f = 0; f < n_fields; ++f) {
      r.categories[f] = perms[f][pickers[f](feature_rng)];
    }
    ctr_offsets[i] = LogitOf(oracle.ctr_weights, 0.0, r);
    cvr_offsets[i] = LogitOf(oracle.cvr_weights, 0.0, r);
  }
  oracle.ctr_intercept = CalibrateIntercept(ctr_offsets, config.base_ctr);
  oracle.cvr_intercept = CalibrateIntercept(cvr_offsets, config.base_cvr);

  Rng label_rng(DeriveSeed(config.seed, "labels"));
  oracle.record_hashes.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    ImpressionRecord& r = ds.records[i];
    double p_ctr = Sigmoid(oracle.ctr_intercept + ctr_offsets[i]);
    double p_cvr = Sigmoid(oracle.cvr_intercept + cvr_offsets[i]);
    // Two draws per record regardless of outcome keep streams aligned.
    double u_click = UniformUnit(label_rng);
    double u_conv = UniformUnit(label_rng);
    r.y_click = u_click < p_ctr ? 1 : 0;
    if (r.y_click) {
      int conv = u_conv < p_cvr ? 1 : 0;
      r.y_conv = conv ? ConvLabel::kPositive : ConvLabel::kNegative;
      r.y_pv_conv = conv;
    } else {
      r.y_conv = ConvLabel::kUnknown;
      r.y_pv_conv = 0;
    }
    oracle.record_hashes[i] = RecordHash(r);
  }
  return world;
}

int CounterfactualDraw(double p_cvr, std::uint64_t seed,
                       std::int64_t sample_id) {
  Rng rng(DeriveSeed(seed, static_cast<std::uint64_t>(sample_id)));
  return UniformUnit(rng) < p_cvr ? 1 : 0;
}

std::vector<int> CounterfactualLabels(const OracleWorld& oracle,
                                      const Dataset& dataset,
                                      std::uint64_t seed) {
  std::vector<int> labels(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const ImpressionRecord& r = dataset.records[i];
    if (!oracle.Owns(r)) {
      throw UsageError("record " + std::to_string(r.sample_id) +
                       " was not generated by this oracle");
    }
    labels[i] = r.clicked() ? r.conversion()
                            : CounterfactualDraw(oracle.TrueCvr(r), seed,
                                                 r.sample_id);
  }
  return labels;
}

void OracleWorld::Save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write oracle file '" + path + "'");
  const GeneratorConfig& c = config;
  out << "ukd-oracle 1\n";
  out << "n_impressions " << c.n_impressions << '\n';
  out << "n_fields " << c.n_fields << '\n';
  out << "cardinalities " << c.cardinalities.size();
  for (auto v : c.cardinalities) out << ' ' << v;
  out << '\n';
  out << "ctr_cvr_correlation " << FormatExact(c.ctr_cvr_correlation) << '\n';
  out << "base_ctr " << FormatExact(c.base_ctr) << '\n';
  out << "base_cvr " << FormatExact(c.base_cvr) << '\n';
  out << "ctr_weight_scale " << FormatExact(c.ctr_weight_scale) << '\n';
  out << "cvr_weight_scale " << FormatExact(c.cvr_weight_scale) << '\n';
  out << "zipf_exponent " << FormatExact(c.zipf_exponent) << '\n';
  out << "seed " << c.seed << '\n';
  out << "ctr_intercept " << FormatExact(ctr_intercept) << '\n';
  out << "cvr_intercept " << FormatExact(cvr_intercept) << '\n';
  auto write_weights = [&](const char* tag,
                           const std::vector<std::vector<double>>& w) {
    for (std::size_t f = 0; f < w.size(); ++f) {
      out << tag << ' ' << f << ' ' << w[f].size();
      for (double v : w[f]) out << ' ' << FormatExact(v);
      out << '\n';
    }
  };
  write_weights("ctr_weights", ctr_weights);
  write_weights("cvr_weights", cvr_weights);
  out << "records " << record_hashes.size() << '\n';
  for (std::uint64_t h : record_hashes) out << h << '\n';
  if (!out) throw IoError("failed writing oracle file '" + path + "'");
}

OracleWorld OracleWorld::Load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read oracle file '" + path + "'");
  auto fail = [&](const std::string& what) {
    return ParseError("oracle file '" + path + "': " + what);
  };
  auto expect = [&](const char* key) {
    std::string k;
    if (!(in >> k) || k != key) throw fail(std::string("expected ") + key);
  };
  auto read_double = [&](const char* key) {
    expect(key);
    std::string tok;
    in >> tok;
    auto v = ParseDouble(tok);
    if (!v) throw fail(std::string("bad value for ") + key);
    return *v;
  };
  std::string magic;
  int version = 0;
  if (!(in >> magic >> version) || magic != "ukd-oracle" || version != 1) {
    throw fail("bad header");
  }
  OracleWorld o;
  GeneratorConfig& c = o.config;
  expect("n_impressions");
  in >> c.n_impressions;
  expect("n_fields");
  in >> c.n_fields;
  expect("cardinalities");
  std::size_t nc = 0;
  in >> nc;
  c.cardinalities.resize(nc);
  for (auto& v : c.cardinalities) in >> v;
  c.ctr_cvr_correlation = read_double("ctr_cvr_correlation");
  c.base_ctr = read_double("base_ctr");
  c.base_cvr = read_double("base_cvr");
  c.ctr_weight_scale = read_double("ctr_weight_scale");
  c.cvr_weight_scale = read_double("cvr_weight_scale");
  c.zipf_exponent = read_double("zipf_exponent");
  expect("seed");
  in >> c.seed;
  o.ctr_intercept = read_double("ctr_intercept");
  o.cvr_intercept = read_double("cvr_intercept");
  const auto cards = c.ResolvedCardinalities();
  auto read_weights = [&](const char* tag,
                          std::vector<std::vector<double>>& w) {
    w.resize(cards.size());
    for (std::size_t f = 0; f < cards.size(); ++f) {
      expect(tag);
      std::size_t field = 0, count = 0;
      in >> field >> count;
      if (!in || field != f || count != cards[f]) throw fail("bad weight row");
      w[f].resize(count);
      for (double& v : w[f]) {
        std::string tok;
        in >> tok;
        auto parsed = ParseDouble(tok);
        if (!parsed) throw fail("bad weight value");
        v = *parsed;
      }
    }
  };
  read_weights("ctr_weights", o.ctr_weights);
  read_weights("cvr_weights", o.cvr_weights);
  expect("records");
  std::size_t nr = 0;
  in >> nr;
  o.record_hashes.resize(nr);
  for (auto& h : o.record_hashes) {
    if (!(in >> h)) throw fail("truncated record hashes");
  }
  return o;
}

}  // namespace ukd::data

#include "ukd/data/log_file.h"

#include <fstream>
#include <istream>
#include <ostream>

#include "ukd/common/errors.h"
#include "ukd/common/text.h"

namespace ukd::data {

void WriteLog(const Dataset& dataset, std::ostream& out) {
  std::string line = "sample_id";
  for (std::size_t f = 0; f < dataset.cardinalities.size(); ++f) {
    line += ',' + std::to_string(f) + ':' +
            std::to_string(dataset.cardinalities[f]);
  }
  line += ",y_click,y_conv,y_pv_conv\n";
  out << line;
  for (const ImpressionRecord& r : dataset.records) {
    line = std::to_string(r.sample_id);
    for (std::size_t f = 0; f < r.categories.size(); ++f) {
      line += ',' + std::to_string(f) + ':' + std::to_string(r.categories[f]);
    }
    line += ',' + std::to_string(r.y_click) + ',';
    line += r.y_conv == ConvLabel::kUnknown ? std::string("?")
                                            : std::to_string(r.conversion());
    line += ',' + std::to_string(r.y_pv_conv) + '\n';
    out << line;
  }
}

void WriteLogFile(const Dataset& dataset, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write log file '" + path + "'");
  WriteLog(dataset, out);
  if (!out) throw IoError("failed writing log file '" + path + "'");
}

namespace {

struct FieldToken {
  std::int64_t field;
  std::int64_t value;
};

std::optional<FieldToken> ParseFieldToken(std::string_view tok) {
  auto parts = Split(tok, ':');
  if (parts.size() != 2) return std::nullopt;
  auto f = ParseInt(parts[0]);
  auto v = ParseInt(parts[1]);
  if (!f || !v || *f < 0 || *v < 0) return std::nullopt;
  return FieldToken{*f, *v};
}

std::optional<int> ParseBit(std::string_view tok) {
  if (tok == "0") return 0;
  if (tok == "1") return 1;
  return std::nullopt;
}

}  // namespace

Dataset ReadLog(std::istream& in, const std::string& source) {
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& what) {
    return ParseError(source + ":" + std::to_string(line_no) + ": " + what);
  };
  Dataset ds;
  ++line_no;
  if (!std::getline(in, line)) throw fail("missing header");
  auto header = Split(line, ',');
  if (header.size() < 4 || header.front() != "sample_id" ||
      header[header.size() - 3] != "y_click" ||
      header[header.size() - 2] != "y_conv" ||
      header[header.size() - 1] != "y_pv_conv") {
    throw fail("bad header");
  }
  const std::size_t n_fields = header.size() - 4;
  if (n_fields == 0) throw fail("header declares no feature fields");
  for (std::size_t f = 0; f < n_fields; ++f) {
    auto tok = ParseFieldToken(header[1 + f]);
    if (!tok || tok->field != static_cast<std::int64_t>(f) || tok->value <= 0 ||
        tok->value > 0xffffffffLL) {
      throw fail("bad field column '" + std::string(header[1 + f]) + "'");
    }
    ds.cardinalities.push_back(static_cast<std::uint32_t>(tok->value));
  }
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) throw fail("empty line");
    auto cols = Split(line, ',');
    if (cols.size() != n_fields + 4) {
      throw fail("expected " + std::to_string(n_fields + 4) + " columns, got " +
                 std::to_string(cols.size()));
    }
    ImpressionRecord r;
    auto id = ParseInt(cols[0]);
    if (!id) throw fail("bad sample_id '" + std::string(cols[0]) + "'");
    r.sample_id = *id;
    r.categories.resize(n_fields);
    for (std::size_t f = 0; f < n_fields; ++f) {
      auto tok = ParseFieldToken(cols[1 + f]);
      if (!tok || tok->field != static_cast<std::int64_t>(f)) {
        throw fail("bad feature '" + std::string(cols[1 + f]) + "'");
      }
      if (tok->value >= ds.cardinalities[f]) {
        throw fail("category " + std::to_string(tok->value) + " of field " +
                   std::to_string(f) + " exceeds cardinality");
      }
      r.categories[f] = static_cast<std::uint32_t>(tok->value);
    }
    auto click = ParseBit(cols[n_fields + 1]);
    if (!click) throw fail("bad y_click '" + std::string(cols[n_fields + 1]) + "'");
    r.y_click = *click;
    std::string_view conv = cols[n_fields + 2];
    if (conv == "?") {
      r.y_conv = ConvLabel::kUnknown;
    } else if (auto bit = ParseBit(conv)) {
      r.y_conv = *bit ? ConvLabel::kPositive : ConvLabel::kNegative;
    } else {
      throw fail("bad y_conv '" + std::string(conv) + "'");
    }
    auto pv = ParseBit(cols[n_fields + 3]);
    if (!pv) throw fail("bad y_pv_conv '" + std::string(cols[n_fields + 3]) + "'");
    r.y_pv_conv = *pv;
    if (!r.LabelsConsistent()) {
      throw fail("labels violate click/conversion consistency");
    }
    ds.records.push_back(std::move(r));
  }
  return ds;
}

Dataset LoadLogFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read log file '" + path + "'");
  return ReadLog(in, path);
}

}  // namespace ukd::data

#include "ukd/nn/checkpoint.h"

#include <fstream>
#include <sstream>

#include "ukd/common/errors.h"
#include "ukd/common/text.h"

namespace ukd::nn {

namespace {

CheckpointHeader ParseHeader(std::istream& in, const std::string& path,
                             std::size_t* param_count) {
  auto fail = [&](const std::string& what) {
    return ParseError("checkpoint '" + path + "': " + what);
  };
  std::string magic, key;
  int version = 0;
  if (!(in >> magic >> version) || magic != "ukd-checkpoint") {
    throw fail("bad magic");
  }
  if (version != 1) throw fail("unsupported version " + std::to_string(version));
  CheckpointHeader h;
  if (!(in >> key >> h.kind) || key != "kind") throw fail("missing kind");
  std::size_t n = 0;
  if (!(in >> key >> n) || key != "meta") throw fail("missing meta block");
  for (std::size_t i = 0; i < n; ++i) {
    std::string k, v;
    if (!(in >> k >> v)) throw fail("truncated meta block");
    h.meta[k] = v;
  }
  if (!(in >> key >> *param_count) || key != "params") {
    throw fail("missing params block");
  }
  return h;
}

}  // namespace

void WriteCheckpoint(const std::string& path, const CheckpointHeader& header,
                     const NetworkGraph& graph) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint '" + path + "'");
  out << "ukd-checkpoint 1\n";
  out << "kind " << header.kind << '\n';
  out << "meta " << header.meta.size() << '\n';
  for (const auto& [k, v] : header.meta) {
    if (k.find_first_of(" \t\n") != std::string::npos ||
        v.find_first_of(" \t\n") != std::string::npos || v.empty()) {
      throw UsageError("checkpoint meta entries must be single tokens: " + k);
    }
    out << k << ' ' << v << '\n';
  }
  out << "params " << graph.Parameters().size() << '\n';
  graph.WriteParameters(out);
  out << "end\n";
  if (!out) throw IoError("failed writing checkpoint '" + path + "'");
}

CheckpointHeader ReadCheckpointHeader(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read checkpoint '" + path + "'");
  std::size_t count = 0;
  return ParseHeader(in, path, &count);
}

void ReadCheckpointParameters(const std::string& path, NetworkGraph& graph) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read checkpoint '" + path + "'");
  std::size_t count = 0;
  ParseHeader(in, path, &count);
  if (count != graph.Parameters().size()) {
    throw ParseError("checkpoint '" + path + "': parameter count mismatch");
  }
  graph.ReadParameters(in);
  std::string end;
  if (!(in >> end) || end != "end") {
    throw ParseError("checkpoint '" + path + "': missing end marker");
  }
}

const std::string& MetaReader::Str(const std::string& key) const {
  auto it = meta_.find(key);
  if (it == meta_.end()) {
    throw ParseError(source_ + ": missing meta key '" + key + "'");
  }
  return it->second;
}

double MetaReader::Double(const std::string& key) const {
  auto v = ParseDouble(Str(key));
  if (!v) throw ParseError(source_ + ": meta key '" + key + "' is not a number");
  return *v;
}

std::int64_t MetaReader::Int(const std::string& key) const {
  auto v = ParseInt(Str(key));
  if (!v) {
    throw ParseError(source_ + ": meta key '" + key + "' is not an integer");
  }
  return *v;
}

std::vector<std::size_t> MetaReader::Widths(const std::string& key) const {
  const std::string& text = Str(key);
  std::vector<std::size_t> out;
  if (text == "-") return out;
  for (auto part : Split(text, 'x')) {
    auto v = ParseInt(part);
    if (!v || *v <= 0) {
      throw ParseError(source_ + ": bad width list for '" + key + "'");
    }
    out.push_back(static_cast<std::size_t>(*v));
  }
  return out;
}

std::vector<std::uint32_t> MetaReader::Cardinalities(
    const std::string& key) const {
  std::vector<std::uint32_t> out;
  for (auto part : Split(Str(key), ',')) {
    auto v = ParseInt(part);
    if (!v || *v <= 0 || *v > 0xFFFFFFFFLL) {
      throw ParseError(source_ + ": bad cardinality list for '" + key + "'");
    }
    out.push_back(static_cast<std::uint32_t>(*v));
  }
  return out;
}

std::string FormatWidths(const std::vector<std::size_t>& widths) {
  if (widths.empty()) return "-";
  std::string out;
  for (std::size_t i = 0; i < widths.size(); ++i) {
    if (i) out += 'x';
    out += std::to_string(widths[i]);
  }
  return out;
}

std::string FormatCardinalities(const std::vector<std::uint32_t>& cards) {
  std::string out;
  for (std::size_t i = 0; i < cards.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(cards[i]);
  }
  return out;
}

}  // namespace ukd::nn

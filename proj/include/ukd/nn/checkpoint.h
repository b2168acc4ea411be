#ifndef UKD_NN_CHECKPOINT_H_
#define UKD_NN_CHECKPOINT_H_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ukd/nn/graph.h"

namespace ukd::nn {

// Versioned text container:
//
//   ukd-checkpoint 1
//   kind <tag>
//   meta <count>
//   <key> <value>          (one per line, keys sorted)
//   params <count>
//   param <name> <rank> <dims...>
//   <values...>
//   end
//
// Values are written in shortest round-trip form, so a load restores every
// parameter bit for bit.
struct CheckpointHeader {
  std::string kind;
  std::map<std::string, std::string> meta;
};

void WriteCheckpoint(const std::string& path, const CheckpointHeader& header,
                     const NetworkGraph& graph);
CheckpointHeader ReadCheckpointHeader(const std::string& path);
// `graph` must already have the structure described by the header.
void ReadCheckpointParameters(const std::string& path, NetworkGraph& graph);

// Typed access to checkpoint meta entries; ParseError names the key.
class MetaReader {
 public:
  MetaReader(const std::map<std::string, std::string>& meta,
             std::string source)
      : meta_(meta), source_(std::move(source)) {}

  const std::string& Str(const std::string& key) const;
  double Double(const std::string& key) const;
  std::int64_t Int(const std::string& key) const;
  // "64x32" form; "-" is the empty list.
  std::vector<std::size_t> Widths(const std::string& key) const;
  // Comma separated.
  std::vector<std::uint32_t> Cardinalities(const std::string& key) const;

 private:
  const std::map<std::string, std::string>& meta_;
  std::string source_;
};

std::string FormatWidths(const std::vector<std::size_t>& widths);
std::string FormatCardinalities(const std::vector<std::uint32_t>& cards);

}  // namespace ukd::nn

#endif  // UKD_NN_CHECKPOINT_H_

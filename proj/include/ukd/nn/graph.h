#ifndef UKD_NN_GRAPH_H_
#define UKD_NN_GRAPH_H_

#include <cstdint>
#include <deque>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ukd/nn/layers.h"
#include "ukd/nn/ops.h"

namespace ukd::nn {

// Embedding table plus named dense stacks. Stack order is insertion order and
// fixes the parameter order used by the optimizer and checkpoints.
class NetworkGraph {
 public:
  NetworkGraph() = default;
  NetworkGraph(std::vector<std::uint32_t> cardinalities,
               std::size_t embedding_dim);

  EmbeddingTable& embedding() { return embedding_; }
  const EmbeddingTable& embedding() const { return embedding_; }

  DenseStack& AddStack(const std::string& name, std::size_t in_dim,
                       const std::vector<std::size_t>& widths,
                       Activation last_activation);
  bool HasStack(const std::string& name) const;
  DenseStack& stack(const std::string& name);
  const DenseStack& stack(const std::string& name) const;
  // References returned by AddStack stay valid as stacks are added.
  const std::deque<DenseStack>& stacks() const { return stacks_; }

  void Initialize(std::uint64_t seed);
  std::vector<Parameter*> Parameters();
  std::vector<const Parameter*> Parameters() const;
  void ZeroGrad();
  std::size_t NumParameters() const;

  // Copies of all parameter values, in Parameters() order.
  std::vector<std::vector<double>> Snapshot() const;
  void Restore(const std::vector<std::vector<double>>& snapshot);

  // Text dump "param <name> <rank> <dims...>" followed by exact values.
  void WriteParameters(std::ostream& out) const;
  // Reads values into an identically shaped graph; ParseError on mismatch.
  void ReadParameters(std::istream& in);

 private:
  EmbeddingTable embedding_;
  std::deque<DenseStack> stacks_;
};

// Intermediate state of a sequential pass embedding -> stack 0 -> stack 1 ...
// with dropout between consecutive stacks in train mode.
struct ActivationTrace {
  Mode mode = Mode::kInfer;
  std::vector<std::uint32_t> categories;
  std::vector<double> embedding_output;
  std::vector<StackTrace> stacks;
  std::vector<DropoutMask> dropouts;  // dropouts[i] precedes stacks[i + 1]
  Logits2 logits{0.0, 0.0};
  Prob2 probabilities{0.5, 0.5};
};

// The final stack must have width 2 (two-class logits).
ActivationTrace Forward(const NetworkGraph& graph,
                        std::span<const std::uint32_t> categories, Mode mode,
                        std::uint64_t dropout_seed, double dropout_rate = 0.0);
// Accumulates gradients of every reachable parameter given dL/dlogits.
// Throws UsageError on infer-mode traces.
void Backward(NetworkGraph& graph, const ActivationTrace& trace,
              const Logits2& grad_logits);

}  // namespace ukd::nn

#endif  // UKD_NN_GRAPH_H_

#include "ukd/nn/graph.h"

#include <istream>
#include <ostream>
#include <sstream>

#include "ukd/common/errors.h"
#include "ukd/common/random.h"
#include "ukd/common/text.h"

namespace ukd::nn {

NetworkGraph::NetworkGraph(std::vector<std::uint32_t> cardinalities,
                           std::size_t embedding_dim)
    : embedding_(std::move(cardinalities), embedding_dim) {}

DenseStack& NetworkGraph::AddStack(const std::string& name, std::size_t in_dim,
                                   const std::vector<std::size_t>& widths,
                                   Activation last_activation) {
  if (HasStack(name)) throw ConfigError("duplicate stack '" + name + "'");
  stacks_.emplace_back(name, in_dim, widths, last_activation);
  return stacks_.back();
}

bool NetworkGraph::HasStack(const std::string& name) const {
  for (const DenseStack& s : stacks_) {
    if (s.name() == name) return true;
  }
  return false;
}

DenseStack& NetworkGraph::stack(const std::string& name) {
  for (DenseStack& s : stacks_) {
    if (s.name() == name) return s;
  }
  throw ConfigError("no stack named '" + name + "'");
}

const DenseStack& NetworkGraph::stack(const std::string& name) const {
  return const_cast<NetworkGraph*>(this)->stack(name);
}

void NetworkGraph::Initialize(std::uint64_t seed) {
  Rng rng(DeriveSeed(seed, "embedding"));
  embedding_.Initialize(rng);
  for (DenseStack& s : stacks_) {
    Rng stack_rng(DeriveSeed(seed, s.name()));
    s.Initialize(stack_rng);
  }
}

std::vector<Parameter*> NetworkGraph::Parameters() {
  std::vector<Parameter*> out{&embedding_.table};
  for (DenseStack& s : stacks_) s.AppendParameters(out);
  return out;
}

std::vector<const Parameter*> NetworkGraph::Parameters() const {
  auto mutable_params = const_cast<NetworkGraph*>(this)->Parameters();
  return {mutable_params.begin(), mutable_params.end()};
}

void NetworkGraph::ZeroGrad() {
  for (Parameter* p : Parameters()) p->ZeroGrad();
}

std::size_t NetworkGraph::NumParameters() const {
  std::size_t n = 0;
  for (const Parameter* p : Parameters()) n += p->size();
  return n;
}

std::vector<std::vector<double>> NetworkGraph::Snapshot() const {
  std::vector<std::vector<double>> out;
  for (const Parameter* p : Parameters()) out.push_back(p->values);
  return out;
}

void NetworkGraph::Restore(const std::vector<std::vector<double>>& snapshot) {
  auto params = Parameters();
  if (snapshot.size() != params.size()) {
    throw UsageError("snapshot does not match graph structure");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (snapshot[i].size() != params[i]->size()) {
      throw UsageError("snapshot does not match parameter " + params[i]->name);
    }
    params[i]->values = snapshot[i];
  }
}

void NetworkGraph::WriteParameters(std::ostream& out) const {
  for (const Parameter* p : Parameters()) {
    out << "param " << p->name << ' ' << p->shape.size();
    for (std::size_t d : p->shape) out << ' ' << d;
    out << '\n';
    for (std::size_t i = 0; i < p->values.size(); ++i) {
      out << FormatExact(p->values[i]) << (i + 1 == p->values.size() ? '\n' : ' ');
    }
  }
}

void NetworkGraph::ReadParameters(std::istream& in) {
  for (Parameter* p : Parameters()) {
    std::string tag, name;
    std::size_t rank = 0;
    if (!(in >> tag >> name >> rank) || tag != "param" || name != p->name ||
        rank != p->shape.size()) {
      throw ParseError("checkpoint: expected parameter '" + p->name + "'");
    }
    for (std::size_t d : p->shape) {
      std::size_t got = 0;
      if (!(in >> got) || got != d) {
        throw ParseError("checkpoint: shape mismatch for '" + p->name + "'");
      }
    }
    for (double& v : p->values) {
      std::string token;
      if (!(in >> token)) {
        throw ParseError("checkpoint: truncated values for '" + p->name + "'");
      }
      auto parsed = ParseDouble(token);
      if (!parsed) {
        throw ParseError("checkpoint: bad value '" + token + "' in '" +
                         p->name + "'");
      }
      v = *parsed;
    }
  }
}

ActivationTrace Forward(const NetworkGraph& graph,
                        std::span<const std::uint32_t> categories, Mode mode,
                        std::uint64_t dropout_seed, double dropout_rate) {
  const auto& stacks = graph.stacks();
  if (stacks.empty() || stacks.back().out_dim() != 2) {
    throw ConfigError("sequential forward needs a final stack of width 2");
  }
  ActivationTrace trace;
  trace.mode = mode;
  trace.categories.assign(categories.begin(), categories.end());
  trace.embedding_output = graph.embedding().Lookup(categories);
  trace.stacks.resize(stacks.size());
  std::vector<double> cur = trace.embedding_output;
  for (std::size_t i = 0; i < stacks.size(); ++i) {
    if (i > 0) {
      DropoutMask mask =
          mode == Mode::kTrain
              ? DropoutMask(cur.size(), dropout_rate,
                            DeriveSeed(dropout_seed, i))
              : DropoutMask::Identity(cur.size());
      cur = mask.Apply(cur);
      trace.dropouts.push_back(std::move(mask));
    }
    cur = stacks[i].Forward(cur, mode == Mode::kTrain ? &trace.stacks[i]
                                                      : nullptr);
  }
  trace.logits = {cur[0], cur[1]};
  trace.probabilities = Softmax2(trace.logits);
  return trace;
}

void Backward(NetworkGraph& graph, const ActivationTrace& trace,
              const Logits2& grad_logits) {
  if (trace.mode != Mode::kTrain) {
    throw UsageError("backward requires a trace recorded in train mode");
  }
  std::vector<double> grad{grad_logits[0], grad_logits[1]};
  std::size_t n = graph.stacks().size();
  for (std::size_t i = n; i-- > 0;) {
    const std::string& name = graph.stacks()[i].name();
    grad = graph.stack(name).Backward(trace.stacks[i], grad);
    if (i > 0) grad = trace.dropouts[i - 1].Backward(grad);
  }
  graph.embedding().Backward(trace.categories, grad);
}

}  // namespace ukd::nn

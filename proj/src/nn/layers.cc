#include "ukd/nn/layers.h"

#include <cmath>

#include "ukd/common/errors.h"

namespace ukd::nn {

Dense::Dense(const std::string& name, std::size_t in_dim, std::size_t out_dim,
             Activation activation)
    : weight(name + "/weight", {out_dim, in_dim}),
      bias(name + "/bias", {out_dim}),
      in_dim_(in_dim),
      out_dim_(out_dim),
      activation_(activation) {
  if (in_dim == 0 || out_dim == 0) {
    throw ConfigError("dense layer '" + name + "' has a zero dimension");
  }
}

void Dense::Initialize(Rng& rng) {
  double bound = 1.0 / std::sqrt(static_cast<double>(in_dim_));
  for (double& w : weight.values) w = (2.0 * UniformUnit(rng) - 1.0) * bound;
  std::fill(bias.values.begin(), bias.values.end(), 0.0);
}

void Dense::Forward(std::span<const double> x, std::vector<double>& pre,
                    std::vector<double>& y) const {
  if (x.size() != in_dim_) {
    throw ConfigError("dense layer '" + weight.name + "' expects input of " +
                      std::to_string(in_dim_) + ", got " +
                      std::to_string(x.size()));
  }
  pre.resize(out_dim_);
  y.resize(out_dim_);
  const double* w = weight.values.data();
  for (std::size_t o = 0; o < out_dim_; ++o) {
    const double* row = w + o * in_dim_;
    double acc = bias.values[o];
    for (std::size_t i = 0; i < in_dim_; ++i) acc += row[i] * x[i];
    pre[o] = acc;
    y[o] = (activation_ == Activation::kRelu && acc <= 0.0) ? 0.0 : acc;
  }
}

void Dense::Backward(std::span<const double> x, std::span<const double> pre,
                     std::span<const double> grad_y,
                     std::vector<double>* grad_x) {
  if (grad_x) grad_x->assign(in_dim_, 0.0);
  double* gw = weight.grad.data();
  const double* w = weight.values.data();
  for (std::size_t o = 0; o < out_dim_; ++o) {
    double g = grad_y[o];
    if (activation_ == Activation::kRelu && pre[o] <= 0.0) g = 0.0;
    if (g == 0.0) continue;
    bias.grad[o] += g;
    double* grow = gw + o * in_dim_;
    for (std::size_t i = 0; i < in_dim_; ++i) grow[i] += g * x[i];
    if (grad_x) {
      const double* row = w + o * in_dim_;
      double* gx = grad_x->data();
      for (std::size_t i = 0; i < in_dim_; ++i) gx[i] += g * row[i];
    }
  }
}

DenseStack::DenseStack(const std::string& name, std::size_t in_dim,
                       const std::vector<std::size_t>& widths,
                       Activation last_activation)
    : name_(name) {
  if (widths.empty()) {
    throw ConfigError("dense stack '" + name + "' has no layers");
  }
  std::size_t prev = in_dim;
  for (std::size_t i = 0; i < widths.size(); ++i) {
    Activation act =
        i + 1 == widths.size() ? last_activation : Activation::kRelu;
    layers_.emplace_back(name + "/" + std::to_string(i), prev, widths[i], act);
    prev = widths[i];
  }
}

void DenseStack::Initialize(Rng& rng) {
  for (Dense& layer : layers_) layer.Initialize(rng);
}

std::vector<double> DenseStack::Forward(std::span<const double> x,
                                        StackTrace* trace) const {
  std::vector<double> cur(x.begin(), x.end());
  std::vector<double> pre;
  std::vector<double> next;
  if (trace) {
    trace->mode = Mode::kTrain;
    trace->inputs.resize(layers_.size());
    trace->pre.resize(layers_.size());
  }
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    layers_[i].Forward(cur, pre, next);
    if (trace) {
      trace->inputs[i] = std::move(cur);
      trace->pre[i] = pre;
    }
    cur = std::move(next);
    next.clear();
  }
  if (trace) trace->output = cur;
  return cur;
}

std::vector<double> DenseStack::Backward(const StackTrace& trace,
                                         std::span<const double> grad_output) {
  if (trace.mode != Mode::kTrain || trace.inputs.size() != layers_.size()) {
    throw UsageError("backward on stack '" + name_ +
                     "' requires a train-mode trace");
  }
  std::vector<double> grad(grad_output.begin(), grad_output.end());
  std::vector<double> grad_in;
  for (std::size_t i = layers_.size(); i-- > 0;) {
    layers_[i].Backward(trace.inputs[i], trace.pre[i], grad, &grad_in);
    grad.swap(grad_in);
  }
  return grad;
}

void DenseStack::AppendParameters(std::vector<Parameter*>& out) {
  for (Dense& layer : layers_) {
    out.push_back(&layer.weight);
    out.push_back(&layer.bias);
  }
}

EmbeddingTable::EmbeddingTable(std::vector<std::uint32_t> cardinalities,
                               std::size_t dim)
    : cardinalities_(std::move(cardinalities)), dim_(dim) {
  if (cardinalities_.empty() || dim_ == 0) {
    throw ConfigError("embedding table needs at least one field and dim > 0");
  }
  std::size_t rows = 0;
  for (std::uint32_t c : cardinalities_) {
    if (c == 0) throw ConfigError("embedding field with cardinality 0");
    offsets_.push_back(rows);
    rows += static_cast<std::size_t>(c) + 1;  // + OOV row
  }
  table = Parameter("embedding", {rows, dim_});
}

void EmbeddingTable::Initialize(Rng& rng) {
  for (double& v : table.values) v = (2.0 * UniformUnit(rng) - 1.0) * 0.05;
}

std::size_t EmbeddingTable::RowIndex(std::size_t field,
                                     std::uint32_t category) const {
  std::uint32_t c = category < cardinalities_[field] ? category
                                                     : cardinalities_[field];
  return offsets_[field] + c;
}

std::vector<double> EmbeddingTable::Lookup(
    std::span<const std::uint32_t> categories) const {
  if (categories.size() != cardinalities_.size()) {
    throw ConfigError("embedding lookup expects " +
                      std::to_string(cardinalities_.size()) +
                      " fields, got " + std::to_string(categories.size()));
  }
  std::vector<double> out(output_dim());
  for (std::size_t f = 0; f < categories.size(); ++f) {
    const double* row = table.values.data() + RowIndex(f, categories[f]) * dim_;
    std::copy(row, row + dim_, out.begin() + f * dim_);
  }
  return out;
}

void EmbeddingTable::Backward(std::span<const std::uint32_t> categories,
                              std::span<const double> grad_output) {
  for (std::size_t f = 0; f < categories.size(); ++f) {
    double* row = table.grad.data() + RowIndex(f, categories[f]) * dim_;
    for (std::size_t k = 0; k < dim_; ++k) row[k] += grad_output[f * dim_ + k];
  }
}

}  // namespace ukd::nn

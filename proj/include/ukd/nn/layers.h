#ifndef UKD_NN_LAYERS_H_
#define UKD_NN_LAYERS_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ukd/common/random.h"
#include "ukd/nn/parameter.h"

namespace ukd::nn {

enum class Mode { kTrain, kInfer };
enum class Activation { kIdentity, kRelu };

// Fully connected layer y = act(W x + b), W stored row-major (out x in).
class Dense {
 public:
  Dense(const std::string& name, std::size_t in_dim, std::size_t out_dim,
        Activation activation);

  std::size_t in_dim() const { return in_dim_; }
  std::size_t out_dim() const { return out_dim_; }
  Activation activation() const { return activation_; }

  // Weights uniform in +-1/sqrt(fan_in), biases zero.
  void Initialize(Rng& rng);

  void Forward(std::span<const double> x, std::vector<double>& pre,
               std::vector<double>& y) const;
  // Accumulates parameter gradients; writes dL/dx into grad_x when non-null.
  void Backward(std::span<const double> x, std::span<const double> pre,
                std::span<const double> grad_y, std::vector<double>* grad_x);

  Parameter weight;
  Parameter bias;

 private:
  std::size_t in_dim_;
  std::size_t out_dim_;
  Activation activation_;
};

struct StackTrace {
  Mode mode = Mode::kInfer;
  std::vector<std::vector<double>> inputs;  // input of each layer
  std::vector<std::vector<double>> pre;     // pre-activation of each layer
  std::vector<double> output;
};

// Ordered dense layers. Hidden layers use ReLU; the last layer uses
// `last_activation` (ReLU for representation learners, identity for heads).
class DenseStack {
 public:
  DenseStack(const std::string& name, std::size_t in_dim,
             const std::vector<std::size_t>& widths,
             Activation last_activation);

  std::size_t in_dim() const { return layers_.front().in_dim(); }
  std::size_t out_dim() const { return layers_.back().out_dim(); }
  const std::string& name() const { return name_; }

  void Initialize(Rng& rng);
  std::vector<double> Forward(std::span<const double> x,
                              StackTrace* trace = nullptr) const;
  // Returns dL/dinput. Throws UsageError for traces recorded in infer mode.
  std::vector<double> Backward(const StackTrace& trace,
                               std::span<const double> grad_output);

  std::vector<Dense>& layers() { return layers_; }
  const std::vector<Dense>& layers() const { return layers_; }
  void AppendParameters(std::vector<Parameter*>& out);

 private:
  std::string name_;
  std::vector<Dense> layers_;
};

// Per-field embedding rows plus one out-of-vocabulary row per field; the
// lookup concatenates the field vectors in field order.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  EmbeddingTable(std::vector<std::uint32_t> cardinalities, std::size_t dim);

  std::size_t num_fields() const { return cardinalities_.size(); }
  std::size_t dim() const { return dim_; }
  std::size_t output_dim() const { return cardinalities_.size() * dim_; }
  const std::vector<std::uint32_t>& cardinalities() const {
    return cardinalities_;
  }

  // Uniform in [-0.05, 0.05].
  void Initialize(Rng& rng);
  // `categories[f]` is the category of field f; ids at or above the
  // cardinality map to the field's OOV row. Throws ConfigError on a field
  // count mismatch.
  std::vector<double> Lookup(std::span<const std::uint32_t> categories) const;
  void Backward(std::span<const std::uint32_t> categories,
                std::span<const double> grad_output);

  std::size_t RowIndex(std::size_t field, std::uint32_t category) const;

  Parameter table;

 private:
  std::vector<std::uint32_t> cardinalities_;
  std::vector<std::size_t> offsets_;
  std::size_t dim_ = 0;
};

}  // namespace ukd::nn

#endif  // UKD_NN_LAYERS_H_

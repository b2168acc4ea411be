#ifndef UKD_NN_ADAM_H_
#define UKD_NN_ADAM_H_

#include <cstdint>
#include <vector>

#include "ukd/nn/parameter.h"

namespace ukd::nn {

struct AdamOptions {
  double learning_rate = 0.005;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Adam with bias correction. Moments are kept per parameter in the order the
// parameters were registered.
class Adam {
 public:
  Adam(AdamOptions options, std::vector<Parameter*> parameters);

  // Applies one update from the accumulated gradients. Throws
  // DivergenceError naming the parameter if any gradient is non-finite.
  void Step();

  std::int64_t step_count() const { return step_; }
  const AdamOptions& options() const { return options_; }

 private:
  AdamOptions options_;
  std::vector<Parameter*> parameters_;
  std::vector<std::vector<double>> first_moment_;
  std::vector<std::vector<double>> second_moment_;
  std::int64_t step_ = 0;
};

}  // namespace ukd::nn

#endif  // UKD_NN_ADAM_H_

#ifndef UKD_NN_TOWER_H_
#define UKD_NN_TOWER_H_

#include <span>
#include <vector>

#include "ukd/nn/layers.h"
#include "ukd/nn/ops.h"

namespace ukd::nn {

// Representation learner followed by a two-logit predictor and a softmax.
struct TowerTrace {
  StackTrace learner;
  StackTrace predictor;
  std::vector<double> hidden;        // learner output h
  std::vector<double> predictor_in;  // h after an optional dropout mask
  DropoutMask dropout;
  Prob2 probs{0.5, 0.5};
};

// `trace` may be null in infer mode. `dropout` is applied between learner and
// predictor; pass nullptr for none.
Prob2 TowerForward(const DenseStack& learner, const DenseStack& predictor,
                   std::span<const double> input, TowerTrace* trace,
                   const DropoutMask* dropout = nullptr);

// Predictor-only pass from an already computed representation.
Prob2 HeadForward(const DenseStack& predictor, std::span<const double> hidden,
                  StackTrace* trace);
// dL/dprobs -> dL/dhidden through softmax and the predictor.
std::vector<double> HeadBackward(DenseStack& predictor, const StackTrace& trace,
                                 const Prob2& probs, const Prob2& grad_probs);

void AddInto(std::vector<double>& acc, std::span<const double> v);

}  // namespace ukd::nn

#endif  // UKD_NN_TOWER_H_

#include "ukd/nn/tower.h"

namespace ukd::nn {

Prob2 HeadForward(const DenseStack& predictor, std::span<const double> hidden,
                  StackTrace* trace) {
  std::vector<double> logits = predictor.Forward(hidden, trace);
  return Softmax2({logits[0], logits[1]});
}

std::vector<double> HeadBackward(DenseStack& predictor, const StackTrace& trace,
                                 const Prob2& probs, const Prob2& grad_probs) {
  Logits2 g = Softmax2Backward(probs, grad_probs);
  return predictor.Backward(trace, std::vector<double>{g[0], g[1]});
}

Prob2 TowerForward(const DenseStack& learner, const DenseStack& predictor,
                   std::span<const double> input, TowerTrace* trace,
                   const DropoutMask* dropout) {
  StackTrace* learner_trace = trace ? &trace->learner : nullptr;
  std::vector<double> hidden = learner.Forward(input, learner_trace);
  std::vector<double> pred_in = dropout ? dropout->Apply(hidden) : hidden;
  Prob2 p = HeadForward(predictor, pred_in, trace ? &trace->predictor : nullptr);
  if (trace) {
    trace->hidden = std::move(hidden);
    trace->predictor_in = std::move(pred_in);
    trace->dropout = dropout ? *dropout
                             : DropoutMask::Identity(trace->hidden.size());
    trace->probs = p;
  }
  return p;
}

void AddInto(std::vector<double>& acc, std::span<const double> v) {
  if (acc.empty()) {
    acc.assign(v.begin(), v.end());
    return;
  }
  for (std::size_t i = 0; i < v.size(); ++i) acc[i] += v[i];
}

}  // namespace ukd::nn

#ifndef UKD_BASELINES_OBJECTIVES_H_
#define UKD_BASELINES_OBJECTIVES_H_

#include <optional>
#include <span>
#include <vector>

#include "ukd/data/dataset.h"
#include "ukd/nn/ops.h"

namespace ukd::baselines {

// Head outputs of one record. Unused heads stay at (0.5, 0.5).
struct HeadProbs {
  nn::Prob2 cvr{0.5, 0.5};
  nn::Prob2 ctr{0.5, 0.5};
  nn::Prob2 ctcvr{0.5, 0.5};
  nn::Prob2 domain{0.5, 0.5};
};

// dL/d(head probabilities) for one record.
struct HeadGrads {
  nn::Prob2 cvr{0.0, 0.0};
  nn::Prob2 ctr{0.0, 0.0};
  nn::Prob2 ctcvr{0.0, 0.0};
  nn::Prob2 domain{0.0, 0.0};
};

struct ObjectiveValue {
  double value = 0.0;
  std::vector<HeadGrads> grads;  // one per record
};

using RecordBatch = std::span<const data::ImpressionRecord* const>;

// Every objective below is a pure function of per-record head probabilities.
// Means are batch-local; an empty clicked subset contributes 0.

// Mean CE(y_conv, p_cvr). UsageError if any record is unclicked.
ObjectiveValue SingleCvrObjective(RecordBatch batch,
                                  std::span<const HeadProbs> heads);

// Clicked-mean CE(y_conv, p_cvr) + gamma * mean CE(y_click, p_ctr).
ObjectiveValue JointObjective(RecordBatch batch,
                              std::span<const HeadProbs> heads, double gamma);

// Mean [CE(y_pv_conv, p_ctr * p_cvr) + gamma * CE(y_click, p_ctr)], the
// product taken on positive-class scores.
ObjectiveValue EsmmObjective(RecordBatch batch,
                             std::span<const HeadProbs> heads, double gamma);

// Mean [CE(y_pv_conv, p_ctcvr) + gamma * CE(y_click, p_ctr)].
ObjectiveValue DivisionObjective(RecordBatch batch,
                                 std::span<const HeadProbs> heads,
                                 double gamma);

// Clicked-mean CE(y_conv, p_cvr) / max(propensity, clip) + gamma * mean
// CE(y_click, p_ctr). The propensity is the predicted CTR unless
// `fixed_propensities` (one per record) is given; it is a constant either way.
ObjectiveValue IpsObjective(RecordBatch batch, std::span<const HeadProbs> heads,
                            double gamma, double propensity_clip,
                            std::optional<std::span<const double>>
                                fixed_propensities = std::nullopt);

// JointObjective + domain_weight * mean CE(y_click, p_domain).
ObjectiveValue JointDomainObjective(RecordBatch batch,
                                    std::span<const HeadProbs> heads,
                                    double gamma, double domain_weight);

// Mean CE(y_click, p_ctr); trains the shared reference CTR model.
ObjectiveValue CtrObjective(RecordBatch batch,
                            std::span<const HeadProbs> heads);

// d/dp_cvr of -log(1 - p_ctr * p_cvr), the CTCVR loss of an unclicked
// record. DomainError unless both arguments lie strictly inside (0, 1).
double EsmmUnclickCvrGradient(double p_ctr, double p_cvr);

// clamp(p_ctcvr / p_ctr, eps, 1 - eps).
double PredictCvrDivision(double p_ctcvr, double p_ctr);

}  // namespace ukd::baselines

#endif  // UKD_BASELINES_OBJECTIVES_H_

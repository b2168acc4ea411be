#include "ukd/baselines/objectives.h"

#include <algorithm>
#include <cmath>

#include "ukd/common/errors.h"

namespace ukd::baselines {

namespace {

using nn::CrossEntropy;
using nn::CrossEntropyGrad;
using nn::HardTarget;
using nn::Prob2;

void CheckSizes(RecordBatch batch, std::span<const HeadProbs> heads) {
  if (batch.size() != heads.size()) {
    throw UsageError("objective: batch and head outputs differ in size");
  }
}

void AddScaled(Prob2& acc, const Prob2& g, double scale) {
  acc[0] += scale * g[0];
  acc[1] += scale * g[1];
}

std::size_t CountClicked(RecordBatch batch) {
  return static_cast<std::size_t>(std::count_if(
      batch.begin(), batch.end(), [](const auto* r) { return r->clicked(); }));
}

// gamma * mean CE(y_click, p_ctr) over the batch.
double AddCtrTerm(RecordBatch batch, std::span<const HeadProbs> heads,
                  double gamma, std::vector<HeadGrads>& grads) {
  if (batch.empty()) return 0.0;
  const double w = gamma / static_cast<double>(batch.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    Prob2 t = HardTarget(batch[i]->y_click);
    sum += CrossEntropy(heads[i].ctr, t);
    AddScaled(grads[i].ctr, CrossEntropyGrad(heads[i].ctr, t), w);
  }
  return w * sum;
}

// Clicked-mean of weight_i * CE(y_conv, p_cvr).
double AddClickedCvrTerm(RecordBatch batch, std::span<const HeadProbs> heads,
                         std::span<const double> weights,
                         std::vector<HeadGrads>& grads) {
  std::size_t n_click = CountClicked(batch);
  if (n_click == 0) return 0.0;
  const double inv = 1.0 / static_cast<double>(n_click);
  double sum = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (!batch[i]->clicked()) continue;
    Prob2 t = HardTarget(batch[i]->conversion());
    double w = weights.empty() ? 1.0 : weights[i];
    sum += w * CrossEntropy(heads[i].cvr, t);
    AddScaled(grads[i].cvr, CrossEntropyGrad(heads[i].cvr, t), w * inv);
  }
  return inv * sum;
}

}  // namespace

ObjectiveValue SingleCvrObjective(RecordBatch batch,
                                  std::span<const HeadProbs> heads) {
  CheckSizes(batch, heads);
  for (const auto* r : batch) {
    if (!r->clicked()) {
      throw UsageError("single-cvr loss: unclicked record " +
                       std::to_string(r->sample_id) + " in batch");
    }
  }
  ObjectiveValue out{0.0, std::vector<HeadGrads>(batch.size())};
  out.value = AddClickedCvrTerm(batch, heads, {}, out.grads);
  return out;
}

ObjectiveValue JointObjective(RecordBatch batch,
                              std::span<const HeadProbs> heads, double gamma) {
  CheckSizes(batch, heads);
  ObjectiveValue out{0.0, std::vector<HeadGrads>(batch.size())};
  out.value = AddClickedCvrTerm(batch, heads, {}, out.grads) +
              AddCtrTerm(batch, heads, gamma, out.grads);
  return out;
}

ObjectiveValue EsmmObjective(RecordBatch batch,
                             std::span<const HeadProbs> heads, double gamma) {
  CheckSizes(batch, heads);
  ObjectiveValue out{0.0, std::vector<HeadGrads>(batch.size())};
  if (batch.empty()) return out;
  const double inv = 1.0 / static_cast<double>(batch.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const double c = heads[i].ctr[nn::kPositive];
    const double v = heads[i].cvr[nn::kPositive];
    Prob2 q = nn::FromScore(c * v);
    Prob2 t = HardTarget(batch[i]->y_pv_conv);
    sum += CrossEntropy(q, t);
    // q = (cv, 1 - cv): dL/d(cv) = g0 - g1.
    Prob2 gq = CrossEntropyGrad(q, t);
    double d_prod = (gq[0] - gq[1]) * inv;
    out.grads[i].cvr[nn::kPositive] += d_prod * c;
    out.grads[i].ctr[nn::kPositive] += d_prod * v;
  }
  out.value = inv * sum + AddCtrTerm(batch, heads, gamma, out.grads);
  return out;
}

ObjectiveValue DivisionObjective(RecordBatch batch,
                                 std::span<const HeadProbs> heads,
                                 double gamma) {
  CheckSizes(batch, heads);
  ObjectiveValue out{0.0, std::vector<HeadGrads>(batch.size())};
  if (batch.empty()) return out;
  const double inv = 1.0 / static_cast<double>(batch.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    Prob2 t = HardTarget(batch[i]->y_pv_conv);
    sum += CrossEntropy(heads[i].ctcvr, t);
    AddScaled(out.grads[i].ctcvr, CrossEntropyGrad(heads[i].ctcvr, t), inv);
  }
  out.value = inv * sum + AddCtrTerm(batch, heads, gamma, out.grads);
  return out;
}

ObjectiveValue IpsObjective(RecordBatch batch, std::span<const HeadProbs> heads,
                            double gamma, double propensity_clip,
                            std::optional<std::span<const double>>
                                fixed_propensities) {
  CheckSizes(batch, heads);
  if (!(propensity_clip > 0.0 && propensity_clip <= 1.0)) {
    throw ConfigError("propensity clip must lie in (0, 1]");
  }
  if (fixed_propensities && fixed_propensities->size() != batch.size()) {
    throw UsageError("ips loss: one fixed propensity per record required");
  }
  std::vector<double> weights(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    double p = fixed_propensities ? (*fixed_propensities)[i]
                                  : heads[i].ctr[nn::kPositive];
    weights[i] = 1.0 / std::max(p, propensity_clip);
  }
  ObjectiveValue out{0.0, std::vector<HeadGrads>(batch.size())};
  out.value = AddClickedCvrTerm(batch, heads, weights, out.grads) +
              AddCtrTerm(batch, heads, gamma, out.grads);
  return out;
}

ObjectiveValue JointDomainObjective(RecordBatch batch,
                                    std::span<const HeadProbs> heads,
                                    double gamma, double domain_weight) {
  ObjectiveValue out = JointObjective(batch, heads, gamma);
  if (batch.empty()) return out;
  const double w = domain_weight / static_cast<double>(batch.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    Prob2 t = HardTarget(batch[i]->y_click);
    sum += CrossEntropy(heads[i].domain, t);
    AddScaled(out.grads[i].domain, CrossEntropyGrad(heads[i].domain, t), w);
  }
  out.value += w * sum;
  return out;
}

ObjectiveValue CtrObjective(RecordBatch batch,
                            std::span<const HeadProbs> heads) {
  CheckSizes(batch, heads);
  ObjectiveValue out{0.0, std::vector<HeadGrads>(batch.size())};
  out.value = AddCtrTerm(batch, heads, 1.0, out.grads);
  return out;
}

double EsmmUnclickCvrGradient(double p_ctr, double p_cvr) {
  if (!(p_ctr > 0.0 && p_ctr < 1.0 && p_cvr > 0.0 && p_cvr < 1.0)) {
    throw DomainError("esmm gradient needs p_ctr and p_cvr strictly in (0,1)");
  }
  return p_ctr / (1.0 - p_ctr * p_cvr);
}

double PredictCvrDivision(double p_ctcvr, double p_ctr) {
  double ctr = std::max(p_ctr, nn::kProbEpsilon);
  return std::clamp(p_ctcvr / ctr, nn::kProbEpsilon, 1.0 - nn::kProbEpsilon);
}

}  // namespace ukd::baselines

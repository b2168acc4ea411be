#include "ukd/nn/ops.h"

#include <algorithm>
#include <cmath>

#include "ukd/common/errors.h"
#include "ukd/common/random.h"

namespace ukd::nn {

double ClipProb(double p) {
  return std::clamp(p, kProbEpsilon, 1.0 - kProbEpsilon);
}

Prob2 Softmax2(const Logits2& z) {
  double m = std::max(z[0], z[1]);
  double a = std::exp(z[0] - m);
  double b = std::exp(z[1] - m);
  double s = a + b;
  return {a / s, b / s};
}

Logits2 Softmax2Backward(const Prob2& p, const Prob2& g) {
  double dot = p[0] * g[0] + p[1] * g[1];
  return {p[0] * (g[0] - dot), p[1] * (g[1] - dot)};
}

double CrossEntropy(const Prob2& prediction, const Prob2& target) {
  double loss = 0.0;
  for (int i = 0; i < 2; ++i) {
    if (target[i] != 0.0) loss -= target[i] * std::log(ClipProb(prediction[i]));
  }
  return loss;
}

Prob2 CrossEntropyGrad(const Prob2& prediction, const Prob2& target) {
  Prob2 g{0.0, 0.0};
  for (int i = 0; i < 2; ++i) {
    double p = prediction[i];
    if (p > kProbEpsilon && p < 1.0 - kProbEpsilon) g[i] = -target[i] / p;
  }
  return g;
}

double KlDivergence(const Prob2& p, const Prob2& q) {
  double kl = 0.0;
  for (int i = 0; i < 2; ++i) {
    double pi = ClipProb(p[i]);
    kl += pi * std::log(pi / ClipProb(q[i]));
  }
  // Rounding can leave nearly equal distributions a hair below zero.
  return std::max(kl, 0.0);
}

KlGradient KlDivergenceGrad(const Prob2& p, const Prob2& q) {
  KlGradient g{{0.0, 0.0}, {0.0, 0.0}};
  for (int i = 0; i < 2; ++i) {
    double pi = ClipProb(p[i]);
    double qi = ClipProb(q[i]);
    if (p[i] == pi) g.d_p[i] = std::log(pi / qi) + 1.0;
    if (q[i] == qi) g.d_q[i] = -pi / qi;
  }
  return g;
}

DropoutMask::DropoutMask(std::size_t size, double rate, std::uint64_t seed) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw ConfigError("dropout rate must lie in [0, 1), got " +
                      std::to_string(rate));
  }
  scales_.assign(size, 1.0);
  if (rate == 0.0) return;
  Rng rng(seed);
  double keep_scale = 1.0 / (1.0 - rate);
  for (double& s : scales_) s = UniformUnit(rng) < rate ? 0.0 : keep_scale;
}

DropoutMask DropoutMask::Identity(std::size_t size) {
  DropoutMask m;
  m.scales_.assign(size, 1.0);
  return m;
}

std::vector<double> DropoutMask::Apply(std::span<const double> input) const {
  std::vector<double> out(input.size());
  for (std::size_t i = 0; i < input.size(); ++i) out[i] = input[i] * scales_[i];
  return out;
}

std::vector<double> DropoutMask::Backward(
    std::span<const double> grad_output) const {
  return Apply(grad_output);
}

std::vector<double> Dropout(std::span<const double> input, double rate,
                            std::uint64_t seed) {
  return DropoutMask(input.size(), rate, seed).Apply(input);
}

std::vector<double> GradientReversal::Forward(std::span<const double> input) {
  return {input.begin(), input.end()};
}

std::vector<double> GradientReversal::Backward(
    std::span<const double> grad_output, double scale) {
  std::vector<double> out(grad_output.size());
  for (std::size_t i = 0; i < grad_output.size(); ++i) {
    out[i] = -scale * grad_output[i];
  }
  return out;
}

}  // namespace ukd::nn

#ifndef UKD_NN_OPS_H_
#define UKD_NN_OPS_H_

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace ukd::nn {

// Two-class distribution. Index 0 is the positive class (click / conversion),
// index 1 the negative class, matching the (p, 1 - p) layout of the heads.
using Prob2 = std::array<double, 2>;
using Logits2 = std::array<double, 2>;

inline constexpr int kPositive = 0;
inline constexpr int kNegative = 1;

// Clipping applied to probabilities before every logarithm.
inline constexpr double kProbEpsilon = 1e-7;

double ClipProb(double p);

// Hard label y in {0, 1} as a target distribution (y, 1 - y).
inline Prob2 HardTarget(int y) {
  return y ? Prob2{1.0, 0.0} : Prob2{0.0, 1.0};
}
// Positive-class score s as a distribution (s, 1 - s).
inline Prob2 FromScore(double s) { return {s, 1.0 - s}; }

Prob2 Softmax2(const Logits2& logits);
// Chain rule through the softmax: given dL/dp returns dL/dlogits.
Logits2 Softmax2Backward(const Prob2& p, const Prob2& grad_p);

// -sum target * log(clip(prediction)).
double CrossEntropy(const Prob2& prediction, const Prob2& target);
// Derivative with respect to the prediction; zero on clipped entries.
Prob2 CrossEntropyGrad(const Prob2& prediction, const Prob2& target);

// sum p * log(p / q) with both sides clipped, floored at 0.
double KlDivergence(const Prob2& p, const Prob2& q);
struct KlGradient {
  Prob2 d_p;
  Prob2 d_q;
};
KlGradient KlDivergenceGrad(const Prob2& p, const Prob2& q);

// Inverted dropout: entries zeroed with probability `rate`, survivors scaled
// by 1 / (1 - rate). A mask of scale factors is kept so backward can reuse it.
class DropoutMask {
 public:
  DropoutMask() = default;
  // Throws ConfigError unless 0 <= rate < 1.
  DropoutMask(std::size_t size, double rate, std::uint64_t seed);
  static DropoutMask Identity(std::size_t size);

  std::vector<double> Apply(std::span<const double> input) const;
  std::vector<double> Backward(std::span<const double> grad_output) const;
  std::span<const double> scales() const { return scales_; }

 private:
  std::vector<double> scales_;
};

std::vector<double> Dropout(std::span<const double> input, double rate,
                            std::uint64_t seed);

// Identity on the way forward, multiplies gradients by -scale on the way back.
struct GradientReversal {
  static std::vector<double> Forward(std::span<const double> input);
  static std::vector<double> Backward(std::span<const double> grad_output,
                                      double scale);
};

}  // namespace ukd::nn

#endif  // UKD_NN_OPS_H_

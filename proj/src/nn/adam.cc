#include "ukd/nn/adam.h"

#include <cmath>

#include "ukd/common/errors.h"

namespace ukd::nn {

Adam::Adam(AdamOptions options, std::vector<Parameter*> parameters)
    : options_(options), parameters_(std::move(parameters)) {
  for (const Parameter* p : parameters_) {
    first_moment_.emplace_back(p->size(), 0.0);
    second_moment_.emplace_back(p->size(), 0.0);
  }
}

void Adam::Step() {
  for (const Parameter* p : parameters_) {
    for (double g : p->grad) {
      if (!std::isfinite(g)) {
        throw DivergenceError("non-finite gradient in parameter '" + p->name +
                              "' at optimizer step " +
                              std::to_string(step_ + 1));
      }
    }
  }
  ++step_;
  const double b1 = options_.beta1;
  const double b2 = options_.beta2;
  const double correction1 = 1.0 - std::pow(b1, static_cast<double>(step_));
  const double correction2 = 1.0 - std::pow(b2, static_cast<double>(step_));
  const double lr = options_.learning_rate;
  for (std::size_t k = 0; k < parameters_.size(); ++k) {
    Parameter& p = *parameters_[k];
    std::vector<double>& m = first_moment_[k];
    std::vector<double>& v = second_moment_[k];
    for (std::size_t i = 0; i < p.size(); ++i) {
      double g = p.grad[i];
      m[i] = b1 * m[i] + (1.0 - b1) * g;
      v[i] = b2 * v[i] + (1.0 - b2) * g * g;
      double m_hat = m[i] / correction1;
      double v_hat = v[i] / correction2;
      p.values[i] -= lr * m_hat / (std::sqrt(v_hat) + options_.epsilon);
    }
  }
}

}  // namespace ukd::nn

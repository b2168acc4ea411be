#include "ukd/nn/parameter.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

namespace ukd::nn {

Parameter::Parameter(std::string name_in, std::vector<std::size_t> shape_in)
    : name(std::move(name_in)), shape(std::move(shape_in)) {
  std::size_t n = std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                                  std::multiplies<>());
  values.assign(n, 0.0);
  grad.assign(n, 0.0);
}

void Parameter::ZeroGrad() { std::fill(grad.begin(), grad.end(), 0.0); }

bool Parameter::AllFinite() const {
  return std::all_of(values.begin(), values.end(),
                     [](double v) { return std::isfinite(v); }) &&
         std::all_of(grad.begin(), grad.end(),
                     [](double v) { return std::isfinite(v); });
}

}  // namespace ukd::nn

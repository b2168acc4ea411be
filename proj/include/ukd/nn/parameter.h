#ifndef UKD_NN_PARAMETER_H_
#define UKD_NN_PARAMETER_H_

#include <cstddef>
#include <string>
#include <vector>

namespace ukd::nn {

// A learnable dense array with a same-shape gradient accumulator.
struct Parameter {
  Parameter() = default;
  Parameter(std::string name, std::vector<std::size_t> shape);

  std::size_t size() const { return values.size(); }
  void ZeroGrad();
  bool AllFinite() const;

  std::string name;
  std::vector<std::size_t> shape;
  std::vector<double> values;
  std::vector<double> grad;
};

}  // namespace ukd::nn

#endif  // UKD_NN_PARAMETER_H_

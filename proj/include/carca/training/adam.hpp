#pragma once

#include <cstddef>
#include <vector>

#include "carca/numerics/matrix.hpp"
#include "carca/numerics/parameters.hpp"

namespace carca::training {

struct OptimizerState {
  std::size_t step = 0;
  std::vector<numerics::Matrix> first;   // one per parameter, same shape
  std::vector<numerics::Matrix> second;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static OptimizerState for_params(const numerics::ParameterSet& params);
};

// Bias-corrected ADAM update in place. Throws ShapeError if the gradients do not mirror
// the parameters and DivergenceError (naming the parameter) on a non-finite gradient;
// in both cases nothing is modified.
void adam_step(numerics::ParameterSet& params, const numerics::Gradients& grads,
               OptimizerState& state, double lr);

}  // namespace carca::training

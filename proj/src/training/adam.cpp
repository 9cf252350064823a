#include "carca/training/adam.hpp"

#include <cmath>
#include <string>

#include "carca/error.hpp"

namespace carca::training {

OptimizerState OptimizerState::for_params(const numerics::ParameterSet& params) {
  OptimizerState state;
  for (const auto& p : params) {
    state.first.emplace_back(p.value.rows(), p.value.cols());
    state.second.emplace_back(p.value.rows(), p.value.cols());
  }
  return state;
}

void adam_step(numerics::ParameterSet& params, const numerics::Gradients& grads,
               OptimizerState& state, double lr) {
  if (grads.size() != params.size() || state.first.size() != params.size() ||
      state.second.size() != params.size()) {
    throw ShapeError("adam_step: " + std::to_string(grads.size()) + " gradients and " +
                     std::to_string(state.first.size()) + " accumulators for " +
                     std::to_string(params.size()) + " parameters");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& p = params[i];
    if (!grads[i].same_shape(p.value) || !state.first[i].same_shape(p.value) ||
        !state.second[i].same_shape(p.value)) {
      throw ShapeError("adam_step: gradient for '" + p.name + "' is " + grads[i].shape_string() +
                       ", parameter is " + p.value.shape_string());
    }
    const auto g = grads[i].data();
    for (std::size_t k = 0; k < g.size(); ++k) {
      if (!std::isfinite(g[k])) {
        throw DivergenceError("non-finite gradient in parameter '" + p.name + "' at entry " +
                              std::to_string(k) + " (step " + std::to_string(state.step + 1) + ")");
      }
    }
  }

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(state.beta1, t);
  const double correction2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto w = params[i].value.data();
    auto m = state.first[i].data();
    auto v = state.second[i].data();
    const auto g = grads[i].data();
    for (std::size_t k = 0; k < w.size(); ++k) {
      m[k] = state.beta1 * m[k] + (1.0 - state.beta1) * g[k];
      v[k] = state.beta2 * v[k] + (1.0 - state.beta2) * g[k] * g[k];
      const double m_hat = m[k] / correction1;
      const double v_hat = v[k] / correction2;
      w[k] -= lr * m_hat / (std::sqrt(v_hat) + state.eps);
    }
  }
}

}  // namespace carca::training

#include "carca/numerics/grad_check.hpp"

#include <algorithm>
#include <cmath>

namespace carca::numerics {
namespace {

double evaluate(const ScalarObjective& f, const ParameterSet& params) {
  Tape tape(/*recording=*/false);
  const auto vars = tape.bind(params);
  return f(tape, vars).value()(0, 0);
}

}  // namespace

GradCheckResult finite_diff_check(const ScalarObjective& f, ParameterSet& params, double h) {
  Gradients analytic;
  {
    Tape tape;
    const auto vars = tape.bind(params);
    analytic = tape.backward(f(tape, vars), params);
  }

  GradCheckResult result;
  for (std::size_t p = 0; p < params.size(); ++p) {
    auto values = params[p].value.data();
    for (std::size_t k = 0; k < values.size(); ++k) {
      const double original = values[k];
      values[k] = original + h;
      const double up = evaluate(f, params);
      values[k] = original - h;
      const double down = evaluate(f, params);
      values[k] = original;

      const double numeric = (up - down) / (2.0 * h);
      const double ad = analytic[p].data()[k];
      const double denom = std::max({std::abs(ad), std::abs(numeric), 1e-8});
      const double rel = std::abs(ad - numeric) / denom;
      ++result.entries_checked;
      if (rel > result.max_relative_error) {
        result.max_relative_error = rel;
        result.worst_parameter = params[p].name;
        result.worst_entry = k;
        result.analytic = ad;
        result.numeric = numeric;
      }
    }
  }
  return result;
}

}  // namespace carca::numerics

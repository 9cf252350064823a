#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>

#include "carca/numerics/parameters.hpp"
#include "carca/numerics/tape.hpp"

namespace carca::numerics {

// Builds a scalar loss on `tape` from the bound parameter leaves. Must be
// deterministic: no dropout, fixed inputs.
using ScalarObjective = std::function<Var(Tape& tape, std::span<const Var> params)>;

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  std::size_t worst_entry = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t entries_checked = 0;
};

// Compares backward() against central differences for every scalar of every parameter.
// Relative error uses the denominator max(|g_ad|, |g_fd|, 1e-8).
GradCheckResult finite_diff_check(const ScalarObjective& f, ParameterSet& params, double h);

}  // namespace carca::numerics

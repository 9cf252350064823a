#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

#include "carca/numerics/parameters.hpp"
#include "carca/numerics/tape.hpp"

namespace carca::training {

using numerics::Var;

inline constexpr double kScoreClamp = 1e-7;

// -sum over unmasked r of [log pos[r] + log(1 - neg[r])], scores clamped to
// [1e-7, 1 - 1e-7]. A fully masked input returns 0 and bumps masked_loss_warnings().
double bce_loss(std::span<const double> pos, std::span<const double> neg,
                std::span<const std::uint8_t> mask);
// Differentiable version over m x 1 score columns. Clamped entries get zero gradient.
Var bce_loss(Var pos, Var neg, std::span<const std::uint8_t> mask);

std::size_t masked_loss_warnings() noexcept;
void reset_masked_loss_warnings() noexcept;

// weight * sum of squared entries over parameters flagged as weights.
double l2_penalty(const numerics::ParameterSet& params, double weight);
// Same on bound leaves; `params` supplies the is_weight flags.
Var l2_penalty(numerics::Tape& tape, std::span<const Var> leaves,
               const numerics::ParameterSet& params, double weight);

}  // namespace carca::training

#include "carca/training/loss.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <string>

#include "carca/error.hpp"

namespace carca::training {

using numerics::Matrix;

namespace {

std::atomic<std::size_t> g_masked_warnings{0};

void check_lengths(std::size_t pos, std::size_t neg, std::size_t mask) {
  if (pos != neg || pos != mask) {
    throw ShapeError("bce_loss: " + std::to_string(pos) + " positive, " + std::to_string(neg) +
                     " negative scores and " + std::to_string(mask) + " mask flags");
  }
}

double clamp_score(double s) { return std::clamp(s, kScoreClamp, 1.0 - kScoreClamp); }

bool inside_clamp(double s) { return s > kScoreClamp && s < 1.0 - kScoreClamp; }

}  // namespace

double bce_loss(std::span<const double> pos, std::span<const double> neg,
                std::span<const std::uint8_t> mask) {
  check_lengths(pos.size(), neg.size(), mask.size());
  double loss = 0.0;
  bool any = false;
  for (std::size_t r = 0; r < mask.size(); ++r) {
    if (!mask[r]) continue;
    any = true;
    loss -= std::log(clamp_score(pos[r])) + std::log(1.0 - clamp_score(neg[r]));
  }
  if (!any) g_masked_warnings.fetch_add(1, std::memory_order_relaxed);
  return loss;
}

Var bce_loss(Var pos, Var neg, std::span<const std::uint8_t> mask) {
  if (pos.cols() != 1 || neg.cols() != 1) throw ShapeError("bce_loss expects score columns");
  const auto p = pos.value().data();
  const auto n = neg.value().data();
  const double value = bce_loss(p, n, mask);
  std::vector<std::uint8_t> flags(mask.begin(), mask.end());
  numerics::Tape& tape = pos.tape();
  return tape.record(numerics::Matrix(1, 1, value), {pos, neg},
                     [pos, neg, flags = std::move(flags)](numerics::Tape& t, const numerics::Matrix& g) {
                       const double scale = g(0, 0);
                       if (Matrix* gp = t.grad_buffer(pos)) {
                         const auto pv = t.value(pos).data();
                         for (std::size_t r = 0; r < flags.size(); ++r) {
                           if (flags[r] && inside_clamp(pv[r])) gp->data()[r] -= scale / pv[r];
                         }
                       }
                       if (Matrix* gn = t.grad_buffer(neg)) {
                         const auto nv = t.value(neg).data();
                         for (std::size_t r = 0; r < flags.size(); ++r) {
                           if (flags[r] && inside_clamp(nv[r])) gn->data()[r] += scale / (1.0 - nv[r]);
                         }
                       }
                     });
}

std::size_t masked_loss_warnings() noexcept { return g_masked_warnings.load(); }
void reset_masked_loss_warnings() noexcept { g_masked_warnings.store(0); }

double l2_penalty(const numerics::ParameterSet& params, double weight) {
  if (weight < 0.0) throw ConfigError("L2 weight must be non-negative");
  if (weight == 0.0) return 0.0;
  double total = 0.0;
  for (const auto& p : params) {
    if (!p.is_weight) continue;
    for (double v : p.value.data()) total += v * v;
  }
  return weight * total;
}

Var l2_penalty(numerics::Tape& tape, std::span<const Var> leaves,
               const numerics::ParameterSet& params, double weight) {
  if (leaves.size() != params.size()) throw ContractError("l2_penalty: leaves do not match parameters");
  const double value = l2_penalty(params, weight);
  std::vector<Var> weights;
  for (std::size_t i = 0; i < leaves.size(); ++i) {
    if (params[i].is_weight) weights.push_back(leaves[i]);
  }
  return tape.record(numerics::Matrix(1, 1, value), weights,
                     [weights, weight](numerics::Tape& t, const numerics::Matrix& g) {
                       const double factor = 2.0 * weight * g(0, 0);
                       for (Var w : weights) {
                         Matrix* gw = t.grad_buffer(w);
                         if (!gw) continue;
                         const auto wv = t.value(w).data();
                         auto dst = gw->data();
                         for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += factor * wv[i];
                       }
                     });
}

}  // namespace carca::training

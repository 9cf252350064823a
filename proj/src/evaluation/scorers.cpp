#include "carca/evaluation/scorers.hpp"

#include <algorithm>

#include "carca/numerics/random.hpp"

namespace carca::evaluation {

std::vector<double> RandomScorer::score(const data::EvalCase& eval_case,
                                        std::span<const data::ItemId> candidates) const {
  std::vector<double> out;
  out.reserve(candidates.size());
  for (data::ItemId item : candidates) {
    const auto bits = numerics::derive_seed({seed_, static_cast<std::uint64_t>(eval_case.user),
                                             static_cast<std::uint64_t>(item)});
    out.push_back(numerics::unit_from_bits(bits));
  }
  return out;
}

std::vector<double> ConstantScorer::score(const data::EvalCase&,
                                          std::span<const data::ItemId> candidates) const {
  return std::vector<double>(candidates.size(), value_);
}

double PopularityScorer::count(data::ItemId item) const {
  if (item < 1 || static_cast<std::size_t>(item) > counts_.size()) return 0.0;
  return counts_[static_cast<std::size_t>(item - 1)];
}

std::vector<double> PopularityScorer::score(const data::EvalCase&,
                                            std::span<const data::ItemId> candidates) const {
  std::vector<double> out;
  out.reserve(candidates.size());
  for (data::ItemId item : candidates) out.push_back(count(item));
  return out;
}

PopularityScorer popularity_baseline(const data::InteractionLog& log) {
  std::vector<double> counts(static_cast<std::size_t>(std::max<data::ItemId>(log.max_item(), 0)), 0.0);
  for (const auto& history : log.users()) {
    const std::size_t keep = history.items.size() >= 2 ? history.items.size() - 2 : 0;
    for (std::size_t i = 0; i < keep; ++i) counts[static_cast<std::size_t>(history.items[i] - 1)] += 1.0;
  }
  return PopularityScorer(std::move(counts));
}

std::vector<double> CarcaScorer::score(const data::EvalCase& eval_case,
                                       std::span<const data::ItemId> candidates) const {
  const std::size_t l = eval_case.target_ctx.cols();
  numerics::Matrix target_ctx(candidates.size(), l);
  for (std::size_t r = 0; r < candidates.size(); ++r) {
    std::copy_n(eval_case.target_ctx.row(0).begin(), l, target_ctx.row(r).begin());
  }
  return model_.score(params_, catalog_, eval_case.profile_items, eval_case.profile_ctx,
                      eval_case.mask, candidates, target_ctx);
}

}  // namespace carca::evaluation

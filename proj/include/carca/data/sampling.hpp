#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "carca/data/interactions.hpp"
#include "carca/data/splits.hpp"
#include "carca/numerics/random.hpp"

namespace carca::data {

// Uniform draw from {1..item_count} \ history (history sorted ascending).
ItemId sample_unseen_item(std::span<const ItemId> history, std::size_t item_count,
                          numerics::Rng& rng);

// Fills one negative per active position, each drawn uniformly from the items the user
// never interacted with. Padded positions get kPaddingItem.
void sample_negatives(TrainingExample& example, std::size_t item_count, numerics::Rng& rng);

// Candidate list for ranking: the held-out target first, then k distinct items outside
// the user's history. Throws SamplingError when fewer than k such items exist.
std::vector<ItemId> sample_eval_candidates(const EvalCase& eval_case, std::size_t item_count,
                                           std::size_t k, numerics::Rng& rng);

}  // namespace carca::data

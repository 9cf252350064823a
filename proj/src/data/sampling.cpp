#include "carca/data/sampling.hpp"

#include <algorithm>
#include <random>
#include <string>

#include "carca/error.hpp"

namespace carca::data {
namespace {

bool in_history(std::span<const ItemId> history, ItemId item) {
  return std::binary_search(history.begin(), history.end(), item);
}

std::size_t complement_size(std::span<const ItemId> history, std::size_t item_count) {
  std::size_t inside = 0;
  for (ItemId i : history) {
    if (i >= 1 && static_cast<std::size_t>(i) <= item_count) ++inside;
  }
  return item_count - inside;
}

std::vector<ItemId> complement(std::span<const ItemId> history, std::size_t item_count) {
  std::vector<ItemId> out;
  out.reserve(item_count);
  for (std::size_t i = 1; i <= item_count; ++i) {
    if (!in_history(history, static_cast<ItemId>(i))) out.push_back(static_cast<ItemId>(i));
  }
  return out;
}

// Rejection sampling is used while at least this share of the catalog is eligible.
constexpr std::size_t kRejectionRatio = 8;

}  // namespace

ItemId sample_unseen_item(std::span<const ItemId> history, std::size_t item_count,
                          numerics::Rng& rng) {
  const std::size_t free = complement_size(history, item_count);
  if (free == 0) {
    throw SamplingError("no item outside the user's " + std::to_string(history.size()) +
                        " interacted items in a catalog of " + std::to_string(item_count));
  }
  if (free * kRejectionRatio >= item_count) {
    std::uniform_int_distribution<ItemId> dist(1, static_cast<ItemId>(item_count));
    while (true) {
      const ItemId candidate = dist(rng);
      if (!in_history(history, candidate)) return candidate;
    }
  }
  const auto pool = complement(history, item_count);
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  return pool[pick(rng)];
}

void sample_negatives(TrainingExample& example, std::size_t item_count, numerics::Rng& rng) {
  example.negatives.assign(example.mask.size(), kPaddingItem);
  for (std::size_t r = 0; r < example.mask.size(); ++r) {
    if (example.mask[r]) example.negatives[r] = sample_unseen_item(example.history, item_count, rng);
  }
}

std::vector<ItemId> sample_eval_candidates(const EvalCase& eval_case, std::size_t item_count,
                                           std::size_t k, numerics::Rng& rng) {
  const std::size_t free = complement_size(eval_case.history, item_count);
  if (free < k) {
    throw SamplingError("user " + std::to_string(eval_case.user) + " has only " +
                        std::to_string(free) + " non-interacted items; " + std::to_string(k) +
                        " negatives requested");
  }
  std::vector<ItemId> out;
  out.reserve(k + 1);
  out.push_back(eval_case.target);

  if (free >= 2 * k && free * kRejectionRatio >= item_count) {
    std::uniform_int_distribution<ItemId> dist(1, static_cast<ItemId>(item_count));
    std::vector<ItemId> chosen;
    chosen.reserve(k);
    while (chosen.size() < k) {
      const ItemId candidate = dist(rng);
      if (in_history(eval_case.history, candidate)) continue;
      if (std::find(chosen.begin(), chosen.end(), candidate) != chosen.end()) continue;
      chosen.push_back(candidate);
    }
    out.insert(out.end(), chosen.begin(), chosen.end());
    return out;
  }

  // Partial Fisher-Yates over the explicit complement.
  auto pool = complement(eval_case.history, item_count);
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
    std::swap(pool[i], pool[pick(rng)]);
    out.push_back(pool[i]);
  }
  return out;
}

}  // namespace carca::data

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "carca/data/catalog.hpp"
#include "carca/data/context.hpp"
#include "carca/data/interactions.hpp"
#include "carca/numerics/matrix.hpp"

namespace carca::data {

// With use_context off every context matrix is zero-width. Attributes are switched off
// by passing a catalog without attributes.
struct FeatureOptions {
  bool use_context = true;
};

// Fixed-length training window for one user. Rows are left-padded so the most recent
// interaction is always the last row. Item attributes are looked up from the catalog
// by id when the model consumes the example.
struct TrainingExample {
  UserId user = 0;
  std::vector<ItemId> profile_items;  // n, kPaddingItem for padding
  numerics::Matrix profile_ctx;       // n x l
  std::vector<ItemId> positives;      // n, profile shifted by one interaction
  std::vector<ItemId> negatives;      // n, filled by sample_negatives
  numerics::Matrix target_ctx;        // n x l, shared by positives[r] and negatives[r]
  std::vector<std::uint8_t> mask;     // n, 0 for padding
  std::vector<ItemId> history;        // sorted distinct items of the whole user history

  std::size_t active_positions() const noexcept;
};

// Held-out item for one user together with the profile that precedes it.
struct EvalCase {
  UserId user = 0;
  std::vector<ItemId> profile_items;  // n, left-padded
  numerics::Matrix profile_ctx;       // n x l
  std::vector<std::uint8_t> mask;     // n
  ItemId target = kPaddingItem;
  numerics::Matrix target_ctx;        // 1 x l
  std::vector<ItemId> history;        // sorted distinct items of the whole user history
};

struct SplitBundle {
  std::size_t max_len = 0;
  std::size_t item_count = 0;
  std::size_t ctx_dim = 0;
  std::vector<TrainingExample> train;
  std::vector<EvalCase> validation;
  std::vector<EvalCase> test;
};

// Leave-one-out split. For a history i_1..i_T: test target i_T with profile i_1..i_{T-1},
// validation target i_{T-1} with profile i_1..i_{T-2}, training input i_1..i_{T-3} with
// positives i_2..i_{T-2}. Every profile keeps its last n rows. Users whose training input
// is empty (T == 3) get validation and test cases but no training window.
SplitBundle build_splits(const InteractionLog& log, std::size_t max_len,
                         const ItemCatalog& catalog, const ContextFeaturizer& featurizer,
                         FeatureOptions options = {});

// One line per user: user, comma-joined training items, validation item, test item.
void save_split_summary(const std::filesystem::path& path, const InteractionLog& log);

}  // namespace carca::data

#include "carca/data/splits.hpp"

#include <algorithm>
#include <fstream>

#include "carca/error.hpp"

namespace carca::data {
namespace {

std::vector<ItemId> distinct_sorted(const std::vector<ItemId>& items) {
  std::vector<ItemId> out = items;
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

void write_ctx_row(numerics::Matrix& m, std::size_t row, const ContextFeaturizer& f,
                   std::int64_t ts) {
  if (m.cols() == 0) return;
  const auto features = f.transform(ts);
  std::copy(features.begin(), features.end(), m.row(row).begin());
}

// Profile made of the interactions [0, end) of `u`, keeping the last `n` of them.
EvalCase make_eval_case(const UserHistory& u, std::size_t end, std::size_t n,
                        std::size_t ctx_dim, const ContextFeaturizer& f,
                        const std::vector<ItemId>& history) {
  EvalCase c;
  c.user = u.user;
  c.profile_items.assign(n, kPaddingItem);
  c.profile_ctx = numerics::Matrix(n, ctx_dim);
  c.mask.assign(n, 0);
  const std::size_t len = std::min(n, end);
  for (std::size_t k = 0; k < len; ++k) {
    const std::size_t src = end - len + k;
    const std::size_t dst = n - len + k;
    c.profile_items[dst] = u.items[src];
    c.mask[dst] = 1;
    write_ctx_row(c.profile_ctx, dst, f, u.timestamps[src]);
  }
  c.target = u.items[end];
  c.target_ctx = numerics::Matrix(1, ctx_dim);
  write_ctx_row(c.target_ctx, 0, f, u.timestamps[end]);
  c.history = history;
  return c;
}

}  // namespace

std::size_t TrainingExample::active_positions() const noexcept {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), std::uint8_t{1}));
}

SplitBundle build_splits(const InteractionLog& log, std::size_t max_len,
                         const ItemCatalog& catalog, const ContextFeaturizer& featurizer,
                         FeatureOptions options) {
  if (max_len < 2) throw ConfigError("max sequence length must be at least 2");
  SplitBundle bundle;
  bundle.max_len = max_len;
  bundle.item_count = catalog.item_count();
  bundle.ctx_dim = options.use_context ? kContextDim : 0;
  const std::size_t n = max_len;
  const std::size_t l = bundle.ctx_dim;

  for (const auto& u : log.users()) {
    const std::size_t total = u.length();
    if (total < kMinHistory) continue;
    for (ItemId item : u.items) {
      if (!catalog.contains(item)) {
        throw ReferentialError("user " + std::to_string(u.user) + " references unknown item " +
                               std::to_string(item));
      }
    }
    const auto history = distinct_sorted(u.items);

    // Training input covers interactions [0, total - 3], positives [1, total - 2].
    const std::size_t pairs = total - 3;
    if (pairs > 0) {
      TrainingExample ex;
      ex.user = u.user;
      ex.profile_items.assign(n, kPaddingItem);
      ex.positives.assign(n, kPaddingItem);
      ex.negatives.assign(n, kPaddingItem);
      ex.mask.assign(n, 0);
      ex.profile_ctx = numerics::Matrix(n, l);
      ex.target_ctx = numerics::Matrix(n, l);
      const std::size_t len = std::min(n, pairs);
      for (std::size_t k = 0; k < len; ++k) {
        const std::size_t src = pairs - len + k;
        const std::size_t dst = n - len + k;
        ex.profile_items[dst] = u.items[src];
        ex.positives[dst] = u.items[src + 1];
        ex.mask[dst] = 1;
        write_ctx_row(ex.profile_ctx, dst, featurizer, u.timestamps[src]);
        write_ctx_row(ex.target_ctx, dst, featurizer, u.timestamps[src + 1]);
      }
      ex.history = history;
      bundle.train.push_back(std::move(ex));
    }
    bundle.validation.push_back(make_eval_case(u, total - 2, n, l, featurizer, history));
    bundle.test.push_back(make_eval_case(u, total - 1, n, l, featurizer, history));
  }
  return bundle;
}

void save_split_summary(const std::filesystem::path& path, const InteractionLog& log) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "# user_id\ttrain_items\tvalidation_item\ttest_item\n";
  for (const auto& u : log.users()) {
    const std::size_t total = u.length();
    out << u.user << '\t';
    for (std::size_t k = 0; k + 2 < total; ++k) out << (k ? "," : "") << u.items[k];
    out << '\t' << u.items[total - 2] << '\t' << u.items[total - 1] << '\n';
  }
}

}  // namespace carca::data

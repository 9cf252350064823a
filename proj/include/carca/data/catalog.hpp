#pragma once

#include <cstddef>
#include <filesystem>
#include <span>

#include "carca/data/interactions.hpp"
#include "carca/numerics/matrix.hpp"

namespace carca::data {

// Item universe 1..I with one dense attribute row per item.
class ItemCatalog {
 public:
  ItemCatalog() = default;
  // attributes: I x j, row k holds item k+1.
  explicit ItemCatalog(numerics::Matrix attributes);
  // Catalog with no attributes (j = 0).
  static ItemCatalog without_attributes(std::size_t item_count);

  std::size_t item_count() const noexcept { return item_count_; }
  std::size_t attr_dim() const noexcept { return attributes_.cols(); }
  const numerics::Matrix& attributes() const noexcept { return attributes_; }
  std::span<const double> attributes_of(ItemId item) const;

  bool contains(ItemId item) const noexcept {
    return item >= 1 && static_cast<std::size_t>(item) <= item_count_;
  }

 private:
  std::size_t item_count_ = 0;
  numerics::Matrix attributes_;
};

// Reads `item_id<TAB>v1,v2,...,vj`. Ids must cover 1..I exactly once.
ItemCatalog load_attributes(const std::filesystem::path& path);
void save_attributes(const std::filesystem::path& path, const ItemCatalog& catalog);

}  // namespace carca::data

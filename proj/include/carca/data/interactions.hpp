#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

namespace carca::data {

using UserId = std::int64_t;
// Items are numbered 1..I; 0 is reserved for padding.
using ItemId = std::int32_t;
inline constexpr ItemId kPaddingItem = 0;

struct Interaction {
  UserId user = 0;
  ItemId item = 0;
  std::int64_t timestamp = 0;
};

// One user's interactions in time order.
struct UserHistory {
  UserId user = 0;
  std::vector<ItemId> items;
  std::vector<std::int64_t> timestamps;

  std::size_t length() const noexcept { return items.size(); }
};

// Time-ordered interactions grouped per user, users in ascending id order.
class InteractionLog {
 public:
  InteractionLog() = default;
  explicit InteractionLog(std::vector<UserHistory> users);

  // Groups records per user and sorts each group by timestamp (stable, so equal
  // timestamps keep input order). Users with fewer than `min_history` records are dropped.
  static InteractionLog from_records(std::span<const Interaction> records,
                                     std::size_t min_history = 3);

  std::span<const UserHistory> users() const noexcept { return users_; }
  std::size_t user_count() const noexcept { return users_.size(); }
  std::size_t interaction_count() const noexcept;
  ItemId max_item() const noexcept;
  bool empty() const noexcept { return users_.empty(); }

  std::vector<Interaction> records() const;

 private:
  std::vector<UserHistory> users_;
};

inline constexpr std::size_t kMinHistory = 3;

// Reads `user<TAB>item<TAB>unix_seconds` lines; `#` lines and blank lines are skipped.
// When item_count is given, items above it raise ReferentialError.
InteractionLog load_interactions(const std::filesystem::path& path,
                                 std::optional<std::size_t> item_count = std::nullopt,
                                 std::size_t min_history = kMinHistory);

void save_interactions(const std::filesystem::path& path, const InteractionLog& log);

// Every user's history minus the last two interactions (the validation and test items).
InteractionLog training_portion(const InteractionLog& log);

}  // namespace carca::data

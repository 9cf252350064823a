#include "carca/data/interactions.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <limits>
#include <map>
#include <string>
#include <string_view>

#include "carca/data/text_io.hpp"
#include "carca/error.hpp"

namespace carca::data {

InteractionLog::InteractionLog(std::vector<UserHistory> users) : users_(std::move(users)) {}

InteractionLog InteractionLog::from_records(std::span<const Interaction> records,
                                            std::size_t min_history) {
  std::map<UserId, std::vector<Interaction>> grouped;
  for (const auto& r : records) grouped[r.user].push_back(r);

  std::vector<UserHistory> users;
  users.reserve(grouped.size());
  for (auto& [user, recs] : grouped) {
    if (recs.size() < min_history) continue;
    std::stable_sort(recs.begin(), recs.end(), [](const Interaction& a, const Interaction& b) {
      return a.timestamp < b.timestamp;
    });
    UserHistory h;
    h.user = user;
    h.items.reserve(recs.size());
    h.timestamps.reserve(recs.size());
    for (const auto& r : recs) {
      h.items.push_back(r.item);
      h.timestamps.push_back(r.timestamp);
    }
    users.push_back(std::move(h));
  }
  return InteractionLog(std::move(users));
}

std::size_t InteractionLog::interaction_count() const noexcept {
  std::size_t n = 0;
  for (const auto& u : users_) n += u.length();
  return n;
}

ItemId InteractionLog::max_item() const noexcept {
  ItemId m = 0;
  for (const auto& u : users_) {
    for (ItemId i : u.items) m = std::max(m, i);
  }
  return m;
}

std::vector<Interaction> InteractionLog::records() const {
  std::vector<Interaction> out;
  out.reserve(interaction_count());
  for (const auto& u : users_) {
    for (std::size_t k = 0; k < u.length(); ++k) {
      out.push_back(Interaction{u.user, u.items[k], u.timestamps[k]});
    }
  }
  return out;
}

InteractionLog load_interactions(const std::filesystem::path& path,
                                 std::optional<std::size_t> item_count,
                                 std::size_t min_history) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open interactions file " + path.string());
  const std::string file = path.string();

  std::vector<Interaction> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_skippable_line(line)) continue;
    const auto fields = split(strip_cr(line), '\t');
    if (fields.size() != 3) {
      throw ParseError(file, line_no, "expected 3 tab-separated fields, got " +
                                          std::to_string(fields.size()));
    }
    Interaction r;
    const auto user = parse_integer(fields[0]);
    const auto item = parse_integer(fields[1]);
    const auto ts = parse_integer(fields[2]);
    if (!user || *user < 1) throw ParseError(file, line_no, "bad user id '" + std::string(fields[0]) + "'");
    if (!item || *item < 1 || *item > std::numeric_limits<ItemId>::max()) {
      throw ParseError(file, line_no, "bad item id '" + std::string(fields[1]) + "'");
    }
    if (!ts || *ts < 0) throw ParseError(file, line_no, "bad timestamp '" + std::string(fields[2]) + "'");
    r.user = *user;
    r.item = static_cast<ItemId>(*item);
    r.timestamp = *ts;
    if (item_count && static_cast<std::size_t>(r.item) > *item_count) {
      throw ReferentialError(file + ":" + std::to_string(line_no) + ": item " +
                             std::to_string(r.item) + " is not in the catalog (" +
                             std::to_string(*item_count) + " items)");
    }
    records.push_back(r);
  }
  return InteractionLog::from_records(records, min_history);
}

void save_interactions(const std::filesystem::path& path, const InteractionLog& log) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "# user_id\titem_id\tunix_timestamp\n";
  for (const auto& u : log.users()) {
    for (std::size_t k = 0; k < u.length(); ++k) {
      out << u.user << '\t' << u.items[k] << '\t' << u.timestamps[k] << '\n';
    }
  }
}

InteractionLog training_portion(const InteractionLog& log) {
  std::vector<UserHistory> users;
  users.reserve(log.user_count());
  for (const auto& u : log.users()) {
    if (u.length() <= 2) continue;
    UserHistory h;
    h.user = u.user;
    h.items.assign(u.items.begin(), u.items.end() - 2);
    h.timestamps.assign(u.timestamps.begin(), u.timestamps.end() - 2);
    users.push_back(std::move(h));
  }
  return InteractionLog(std::move(users));
}

}  // namespace carca::data

#include <algorithm>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <set>

#include "carca/data/catalog.hpp"
#include "carca/data/context.hpp"
#include "carca/data/interactions.hpp"
#include "carca/data/sampling.hpp"
#include "carca/data/splits.hpp"
#include "carca/error.hpp"
#include "doctest.h"
#include "synthetic.hpp"

using namespace carca;
using namespace carca::data;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures = CARCA_FIXTURE_DIR;

fs::path scratch_file(const std::string& name, const std::string& contents) {
  const fs::path dir = fs::temp_directory_path() / "carca_test_data";
  fs::create_directories(dir);
  const fs::path p = dir / name;
  std::ofstream(p) << contents;
  return p;
}

// Calendar fields from the C library, independent of the std::chrono code path.
CalendarFeatures libc_calendar(std::int64_t ts) {
  const std::time_t t = static_cast<std::time_t>(ts);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char week[8];
  char weekday[8];
  std::strftime(week, sizeof(week), "%V", &tm);
  std::strftime(weekday, sizeof(weekday), "%u", &tm);
  return {static_cast<double>(tm.tm_mday), static_cast<double>(tm.tm_mon + 1),
          static_cast<double>(tm.tm_year + 1900), std::stod(weekday),
          static_cast<double>(tm.tm_yday + 1), std::stod(week)};
}

const UserHistory& user_of(const InteractionLog& log, UserId id) {
  for (const auto& u : log.users())
    if (u.user == id) return u;
  FAIL("user missing");
  return log.users().front();
}

}  // namespace

TEST_CASE("load_interactions sorts per user and drops short users") {
  const auto log = load_interactions(kFixtures / "toy_interactions.tsv");
  CHECK(log.user_count() == 3);
  CHECK(log.interaction_count() == 15);
  CHECK(user_of(log, 1).items == std::vector<ItemId>{1, 2, 3, 5, 4});
  CHECK(std::is_sorted(user_of(log, 1).timestamps.begin(), user_of(log, 1).timestamps.end()));
  CHECK(user_of(log, 2).items == std::vector<ItemId>{2, 6, 1, 2});
}

TEST_CASE("empty file gives an empty log") {
  CHECK(load_interactions(scratch_file("empty.tsv", "")).empty());
  CHECK(load_interactions(scratch_file("comments.tsv", "# nothing\n\n")).empty());
}

TEST_CASE("duplicate rows are kept") {
  const auto log = load_interactions(scratch_file("dups.tsv", "1\t1\t10\n1\t1\t10\n1\t2\t20\n"));
  CHECK(log.interaction_count() == 3);
  CHECK(log.users()[0].items == std::vector<ItemId>{1, 1, 2});
}

TEST_CASE("malformed line reports its line number") {
  try {
    load_interactions(kFixtures / "bad_timestamp.tsv");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
    CHECK(std::string(e.what()).find("bad_timestamp.tsv:2") != std::string::npos);
  }
}

TEST_CASE("unknown item is a referential error") {
  CHECK_THROWS_AS(load_interactions(kFixtures / "unknown_item.tsv", std::size_t{6}), ReferentialError);
  CHECK_NOTHROW(load_interactions(kFixtures / "unknown_item.tsv"));
}

TEST_CASE("interaction log round trips through TSV") {
  const auto log = load_interactions(kFixtures / "toy_interactions.tsv");
  const fs::path p = scratch_file("roundtrip.tsv", "");
  save_interactions(p, log);
  const auto again = load_interactions(p);
  CHECK(again.records().size() == log.records().size());
  for (std::size_t i = 0; i < log.users().size(); ++i) {
    CHECK(again.users()[i].items == log.users()[i].items);
    CHECK(again.users()[i].timestamps == log.users()[i].timestamps);
  }
}

TEST_CASE("attributes load and validate coverage") {
  const auto catalog = load_attributes(kFixtures / "toy_attributes.tsv");
  CHECK(catalog.item_count() == 6);
  CHECK(catalog.attr_dim() == 3);
  CHECK(catalog.attributes_of(6)[2] == -2.0);
  CHECK_THROWS_AS(catalog.attributes_of(7), ReferentialError);
  CHECK_THROWS_AS(load_attributes(scratch_file("gap.tsv", "1\t0.5\n3\t0.5\n")), DataError);
  CHECK_THROWS_AS(load_attributes(scratch_file("ragged.tsv", "1\t0.5,1\n2\t0.5\n")), DataError);
  CHECK_THROWS_AS(load_attributes(scratch_file("nan.tsv", "1\tnan\n")), DataError);
}

TEST_CASE("context features match the C calendar") {
  const CalendarFeatures epoch{1, 1, 1970, 4, 1, 1};
  CHECK(featurize_context(0) == epoch);
  CHECK(libc_calendar(0) == epoch);
  CHECK(featurize_context(86399) == featurize_context(0));
  const auto next_year = featurize_context(31536000);
  CHECK(next_year[2] == 1971);
  CHECK(next_year[4] == 1);

  numerics::Rng rng(17);
  for (int trial = 0; trial < 2000; ++trial) {
    const auto ts = static_cast<std::int64_t>(rng() % 4102444800ULL);  // up to 2100
    CHECK(featurize_context(ts) == libc_calendar(ts));
  }
  // Year boundaries where the ISO week belongs to the neighbouring year.
  for (std::int64_t ts : {1230681600LL, 1262217600LL, 1609459200LL, 1704067200LL, 1735603200LL}) {
    CHECK(featurize_context(ts) == libc_calendar(ts));
  }
}

TEST_CASE("normalizer fitting") {
  const auto single = InteractionLog::from_records(std::vector<Interaction>{{1, 1, 1000}, {1, 2, 1000}, {1, 3, 1000}});
  const auto f = fit_normalizer(single);
  for (double v : f.transform(1000)) CHECK(v == 0.0);

  const std::int64_t t0 = testing::kEpoch2020;
  const std::int64_t t1 = t0 + 366 * testing::kDay;  // 2021-01-01
  const auto two = InteractionLog::from_records(std::vector<Interaction>{{1, 1, t0}, {1, 2, t1}, {1, 3, t1}});
  const auto g = fit_normalizer(two);
  CHECK(g.transform(t0)[2] == 0.0);
  CHECK(g.transform(t1)[2] == 1.0);

  const auto log = testing::rule_log(50, 40, 12);
  const auto h = fit_normalizer(log);
  for (const auto& u : log.users())
    for (auto ts : u.timestamps)
      for (double v : h.transform(ts)) CHECK((v >= 0.0 && v <= 1.0));

  const fs::path p = scratch_file("featurizer.tsv", "");
  save_featurizer(p, h);
  CHECK(load_featurizer(p) == h);
}

TEST_CASE("splits hold out the last two interactions") {
  const auto log = load_interactions(kFixtures / "toy_interactions.tsv");
  const auto catalog = load_attributes(kFixtures / "toy_attributes.tsv");
  const auto featurizer = fit_normalizer(training_portion(log));
  const auto bundle = build_splits(log, 3, catalog, featurizer);
  REQUIRE(bundle.train.size() == 3);
  REQUIRE(bundle.test.size() == 3);

  // User 1: 1 2 3 5 4 -> train input 1 2, positives 2 3; validation 5; test 4.
  const auto& ex = bundle.train[0];
  CHECK(ex.profile_items == std::vector<ItemId>{0, 1, 2});
  CHECK(ex.positives == std::vector<ItemId>{0, 2, 3});
  CHECK(ex.mask == std::vector<std::uint8_t>{0, 1, 1});
  CHECK(bundle.validation[0].target == 5);
  CHECK(bundle.validation[0].profile_items == std::vector<ItemId>{1, 2, 3});
  CHECK(bundle.test[0].target == 4);
  CHECK(bundle.test[0].profile_items == std::vector<ItemId>{2, 3, 5});
  CHECK(bundle.test[0].history == std::vector<ItemId>{1, 2, 3, 4, 5});
}

TEST_CASE("ten-interaction user with n=5") {
  std::vector<Interaction> recs;
  for (int k = 1; k <= 10; ++k) recs.push_back({1, static_cast<ItemId>(k), 1000 * k});
  const auto log = InteractionLog::from_records(recs);
  const auto bundle = build_splits(log, 5, ItemCatalog::without_attributes(10),
                                   fit_normalizer(training_portion(log)));
  // Training prefix is 1..8: inputs end at 7, positives at 8.
  CHECK(bundle.train[0].profile_items == std::vector<ItemId>{3, 4, 5, 6, 7});
  CHECK(bundle.train[0].positives == std::vector<ItemId>{4, 5, 6, 7, 8});
  CHECK(bundle.validation[0].target == 9);
  CHECK(bundle.test[0].target == 10);
}

TEST_CASE("three-interaction user has no training window") {
  const auto log = InteractionLog::from_records(std::vector<Interaction>{{1, 1, 1}, {1, 2, 2}, {1, 3, 3}});
  const auto bundle = build_splits(log, 5, ItemCatalog::without_attributes(3), fit_normalizer(training_portion(log)));
  CHECK(bundle.train.empty());
  CHECK(bundle.validation[0].target == 2);
  CHECK(bundle.validation[0].profile_items == std::vector<ItemId>{0, 0, 0, 0, 1});
  CHECK(bundle.test[0].target == 3);
}

TEST_CASE("long max_len pads everything") {
  const auto log = testing::rule_log(10, 30, 6);
  const auto bundle = build_splits(log, 50, ItemCatalog::without_attributes(30), fit_normalizer(training_portion(log)));
  for (const auto& ex : bundle.train) CHECK(ex.active_positions() == 3);
  for (const auto& c : bundle.test) CHECK(std::count(c.mask.begin(), c.mask.end(), 1) == 5);
}

TEST_CASE("split invariants on a random log") {
  numerics::Rng rng(99);
  std::vector<Interaction> recs;
  for (UserId u = 1; u <= 40; ++u) {
    const int len = 3 + static_cast<int>(rng() % 15);
    for (int k = 0; k < len; ++k) {
      recs.push_back({u, static_cast<ItemId>(1 + rng() % 25), static_cast<std::int64_t>(rng() % 100000000)});
    }
  }
  const auto log = InteractionLog::from_records(recs);
  const auto catalog = testing::random_catalog(25, 2, 1);
  const auto bundle = build_splits(log, 6, catalog, fit_normalizer(training_portion(log)));

  std::size_t t = 0;
  for (const auto& u : log.users()) {
    if (u.length() == 3) continue;
    const auto& ex = bundle.train.at(t++);
    REQUIRE(ex.user == u.user);
    // Left padding: zeros then ones.
    CHECK(std::is_sorted(ex.mask.begin(), ex.mask.end()));
    // Positives are log successors of the profile items, and never the held-out slots.
    const std::size_t train_len = u.length() - 2;
    std::size_t src = train_len - 1 - ex.active_positions();
    for (std::size_t r = 0; r < ex.mask.size(); ++r) {
      if (!ex.mask[r]) {
        CHECK(ex.profile_items[r] == kPaddingItem);
        continue;
      }
      CHECK(ex.profile_items[r] == u.items[src]);
      CHECK(ex.positives[r] == u.items[src + 1]);
      CHECK(src + 1 < train_len);
      ++src;
    }
  }
  CHECK(t == bundle.train.size());
}

TEST_CASE("negatives come from the complement and share context") {
  const auto log = InteractionLog::from_records(std::vector<Interaction>{{1, 1, 10}, {1, 2, 20}, {1, 3, 30}, {1, 1, 40}, {1, 2, 50}});
  const auto bundle = build_splits(log, 4, ItemCatalog::without_attributes(5), fit_normalizer(training_portion(log)));
  auto ex = bundle.train.at(0);
  numerics::Rng rng(1);
  for (int round = 0; round < 50; ++round) {
    sample_negatives(ex, 5, rng);
    for (std::size_t r = 0; r < ex.mask.size(); ++r) {
      if (ex.mask[r]) {
        CHECK((ex.negatives[r] == 4 || ex.negatives[r] == 5));
      } else {
        CHECK(ex.negatives[r] == kPaddingItem);
      }
    }
  }
  // target_ctx is the single context source for both members of a pair.
  CHECK(ex.target_ctx.rows() == ex.positives.size());

  auto a = bundle.train.at(0), b = bundle.train.at(0);
  numerics::Rng r1(77), r2(77);
  sample_negatives(a, 5, r1);
  sample_negatives(b, 5, r2);
  CHECK(a.negatives == b.negatives);
}

TEST_CASE("negative frequencies are uniform over the complement") {
  const std::vector<ItemId> history{1, 2, 3};
  numerics::Rng rng(2024);
  const int draws = 100000;
  int fours = 0;
  for (int i = 0; i < draws; ++i) {
    const ItemId item = sample_unseen_item(history, 5, rng);
    REQUIRE((item == 4 || item == 5));
    fours += item == 4;
  }
  const double sigma = std::sqrt(draws * 0.25);
  CHECK(std::abs(fours - draws / 2.0) <= 3.0 * sigma);
}

TEST_CASE("sampling fails when the complement is empty") {
  const std::vector<ItemId> history{1, 2, 3};
  numerics::Rng rng(1);
  CHECK_THROWS_AS(sample_unseen_item(history, 3, rng), SamplingError);
}

TEST_CASE("evaluation candidates") {
  const auto log = testing::rule_log(5, 700, 10);
  const auto bundle = build_splits(log, 8, ItemCatalog::without_attributes(700), fit_normalizer(training_portion(log)));
  numerics::Rng rng(5);
  for (const auto& c : bundle.test) {
    for (std::size_t k : {std::size_t{100}, std::size_t{500}}) {
      const auto cands = sample_eval_candidates(c, 700, k, rng);
      CHECK(cands.size() == k + 1);
      CHECK(cands.front() == c.target);
      const std::set<ItemId> distinct(cands.begin(), cands.end());
      CHECK(distinct.size() == cands.size());
      for (std::size_t i = 1; i < cands.size(); ++i) {
        CHECK(!std::binary_search(c.history.begin(), c.history.end(), cands[i]));
      }
    }
  }
  CHECK_THROWS_AS(sample_eval_candidates(bundle.test[0], 700, 691, rng), SamplingError);
  CHECK_NOTHROW(sample_eval_candidates(bundle.test[0], 700, 690, rng));
}

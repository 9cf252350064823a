#include "carca/data/context.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iomanip>
#include <limits>
#include <string>

#include "carca/data/text_io.hpp"
#include "carca/error.hpp"

namespace carca::data {
namespace {

using namespace std::chrono;

// ISO-8601 week number: the week containing the year's first Thursday is week 1.
unsigned iso_week(sys_days day) {
  const weekday wd{day};
  const sys_days thursday = day + days{4 - static_cast<int>(wd.iso_encoding())};
  const year_month_day thursday_ymd{thursday};
  const sys_days jan1{thursday_ymd.year() / January / 1};
  return static_cast<unsigned>((thursday - jan1).count() / 7 + 1);
}

constexpr std::array<const char*, kContextDim> kFeatureNames = {
    "day", "month", "year", "day_of_week", "day_of_year", "week"};

}  // namespace

CalendarFeatures featurize_context(std::int64_t unix_seconds) {
  const sys_days day = floor<days>(sys_seconds{seconds{unix_seconds}});
  const year_month_day ymd{day};
  const weekday wd{day};
  const sys_days jan1{ymd.year() / January / 1};
  return {static_cast<double>(static_cast<unsigned>(ymd.day())),
          static_cast<double>(static_cast<unsigned>(ymd.month())),
          static_cast<double>(static_cast<int>(ymd.year())),
          static_cast<double>(wd.iso_encoding()),
          static_cast<double>((day - jan1).count() + 1),
          static_cast<double>(iso_week(day))};
}

CalendarFeatures ContextFeaturizer::transform(std::int64_t unix_seconds) const {
  CalendarFeatures raw = featurize_context(unix_seconds);
  for (std::size_t k = 0; k < kContextDim; ++k) {
    const double range = max_[k] - min_[k];
    raw[k] = range > 0.0 ? (raw[k] - min_[k]) / range : 0.0;
  }
  return raw;
}

ContextFeaturizer fit_normalizer(const InteractionLog& training_log) {
  if (training_log.empty()) throw DataError("cannot fit context normalizer on an empty log");
  CalendarFeatures lo;
  CalendarFeatures hi;
  lo.fill(std::numeric_limits<double>::infinity());
  hi.fill(-std::numeric_limits<double>::infinity());
  for (const auto& u : training_log.users()) {
    for (std::int64_t ts : u.timestamps) {
      const auto f = featurize_context(ts);
      for (std::size_t k = 0; k < kContextDim; ++k) {
        lo[k] = std::min(lo[k], f[k]);
        hi[k] = std::max(hi[k], f[k]);
      }
    }
  }
  return ContextFeaturizer(lo, hi);
}

void save_featurizer(const std::filesystem::path& path, const ContextFeaturizer& f) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "# feature\tmin\tmax\n" << std::setprecision(17);
  for (std::size_t k = 0; k < kContextDim; ++k) {
    out << kFeatureNames[k] << '\t' << f.min()[k] << '\t' << f.max()[k] << '\n';
  }
}

ContextFeaturizer load_featurizer(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open featurizer stats " + path.string());
  CalendarFeatures lo{};
  CalendarFeatures hi{};
  std::size_t k = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_skippable_line(line)) continue;
    const auto fields = split(strip_cr(line), '\t');
    if (k >= kContextDim || fields.size() != 3 || fields[0] != kFeatureNames[k]) {
      throw ParseError(path.string(), line_no, "unexpected featurizer row");
    }
    const auto a = parse_real(fields[1]);
    const auto b = parse_real(fields[2]);
    if (!a || !b) throw ParseError(path.string(), line_no, "bad min/max value");
    lo[k] = *a;
    hi[k] = *b;
    ++k;
  }
  if (k != kContextDim) throw DataError(path.string() + ": expected 6 feature rows");
  return ContextFeaturizer(lo, hi);
}

}  // namespace carca::data

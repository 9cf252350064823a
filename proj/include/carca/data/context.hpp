#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>

#include "carca/data/interactions.hpp"

namespace carca::data {

inline constexpr std::size_t kContextDim = 6;

// (day of month, month, year, ISO day of week [Mon=1..Sun=7], day of year, ISO week), UTC.
using CalendarFeatures = std::array<double, kContextDim>;

CalendarFeatures featurize_context(std::int64_t unix_seconds);

// Min-max scaler for calendar features, fitted on training interactions.
class ContextFeaturizer {
 public:
  ContextFeaturizer() = default;
  ContextFeaturizer(CalendarFeatures min, CalendarFeatures max) : min_(min), max_(max) {}

  // Constant features map to 0.
  CalendarFeatures transform(std::int64_t unix_seconds) const;

  const CalendarFeatures& min() const noexcept { return min_; }
  const CalendarFeatures& max() const noexcept { return max_; }

  bool operator==(const ContextFeaturizer&) const = default;

 private:
  CalendarFeatures min_{};
  CalendarFeatures max_{};
};

ContextFeaturizer fit_normalizer(const InteractionLog& training_log);

void save_featurizer(const std::filesystem::path& path, const ContextFeaturizer& f);
ContextFeaturizer load_featurizer(const std::filesystem::path& path);

}  // namespace carca::data

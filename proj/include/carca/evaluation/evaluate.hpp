#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "carca/data/splits.hpp"
#include "carca/evaluation/scorers.hpp"

namespace carca::evaluation {

// ranking: HR@K and NDCG@K (default 100 negatives). auc: NDCG@K and AUC (default 500).
enum class ProtocolKind { ranking, auc };

std::string_view to_string(ProtocolKind kind);
ProtocolKind parse_protocol_kind(std::string_view s);

struct Protocol {
  ProtocolKind kind = ProtocolKind::ranking;
  std::size_t k = 10;
  std::size_t negatives = 100;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};

  static Protocol ranking();
  static Protocol auc_protocol();
};

struct RunMetrics {
  std::uint64_t seed = 0;
  std::optional<double> hr;
  std::optional<double> ndcg;
  std::optional<double> auc;
};

struct MetricSummary {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation; 0 for a single run
};

struct RankingReport {
  std::string scorer;
  ProtocolKind kind = ProtocolKind::ranking;
  std::size_t k = 10;
  std::size_t negatives = 100;
  std::size_t users = 0;
  std::vector<std::uint64_t> seeds;
  std::vector<RunMetrics> runs;
  std::optional<MetricSummary> hr;
  std::optional<MetricSummary> ndcg;
  std::optional<MetricSummary> auc;

  bool operator==(const RankingReport&) const;
};

// Worker threads used by evaluate(): hardware concurrency, capped by CARCA_THREADS.
std::size_t worker_count();

// For every seed, samples candidates per user from a stream derived from (seed, user),
// scores them and averages the per-user metrics. Users are processed in parallel and
// reduced in input order, so the result does not depend on the thread count.
RankingReport evaluate(const Scorer& scorer, std::span<const data::EvalCase> cases,
                       std::size_t item_count, const Protocol& protocol);

std::string report_to_json(const RankingReport& report);
RankingReport report_from_json(std::string_view text);
void save_report(const std::filesystem::path& path, const RankingReport& report);

}  // namespace carca::evaluation

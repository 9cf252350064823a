#include "carca/evaluation/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "carca/error.hpp"

namespace carca::evaluation {

std::size_t rank_position(double pos_score, std::span<const double> neg_scores) {
  std::size_t rank = 1;
  for (double s : neg_scores) {
    if (s >= pos_score) ++rank;
  }
  return rank;
}

double hr_at_k(std::size_t rank, std::size_t k) {
  if (rank == 0) throw ContractError("ranks start at 1");
  return rank <= k ? 1.0 : 0.0;
}

double ndcg_at_k(std::size_t rank, std::size_t k) {
  if (rank == 0) throw ContractError("ranks start at 1");
  if (rank > k) return 0.0;
  return 1.0 / std::log2(static_cast<double>(rank) + 1.0);
}

double auc(double pos_score, std::span<const double> neg_scores) {
  if (neg_scores.empty()) throw ContractError("auc needs at least one negative");
  double below = 0.0;
  for (double s : neg_scores) {
    if (s < pos_score) {
      below += 1.0;
    } else if (s == pos_score) {
      below += 0.5;
    }
  }
  return below / static_cast<double>(neg_scores.size());
}

double gini_coefficient(std::span<const double> frequencies) {
  if (frequencies.empty()) throw ContractError("gini of an empty distribution");
  std::vector<double> x(frequencies.begin(), frequencies.end());
  std::sort(x.begin(), x.end());
  if (x.front() < 0.0) throw ContractError("gini needs non-negative frequencies");
  const double n = static_cast<double>(x.size());
  double total = 0.0;
  double weighted = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    total += x[i];
    weighted += (2.0 * static_cast<double>(i + 1) - n - 1.0) * x[i];
  }
  if (total == 0.0) return 0.0;
  return weighted / (n * total);
}

double gini_index(std::span<const data::ItemId> items, std::size_t item_count) {
  if (items.empty()) throw ContractError("gini_index needs at least one item");
  std::vector<double> counts(item_count, 0.0);
  for (data::ItemId item : items) {
    if (item < 1 || static_cast<std::size_t>(item) > item_count) {
      throw ReferentialError("item " + std::to_string(item) + " outside catalog of " +
                             std::to_string(item_count));
    }
    counts[static_cast<std::size_t>(item - 1)] += 1.0;
  }
  return gini_coefficient(counts);
}

}  // namespace carca::evaluation

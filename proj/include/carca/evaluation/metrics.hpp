#pragma once

#include <cstddef>
#include <span>

#include "carca/data/interactions.hpp"

namespace carca::evaluation {

// 1 + number of negatives scoring >= the positive. Ties count against the positive.
std::size_t rank_position(double pos_score, std::span<const double> neg_scores);

double hr_at_k(std::size_t rank, std::size_t k);
// 1/log2(rank+1) within the cutoff, else 0.
double ndcg_at_k(std::size_t rank, std::size_t k);

// Fraction of negatives strictly below the positive, ties counted half.
double auc(double pos_score, std::span<const double> neg_scores);

// Gini coefficient of a non-negative frequency vector (0 = perfectly even).
double gini_coefficient(std::span<const double> frequencies);
// Gini coefficient of item popularity in `items` over the catalog 1..item_count;
// items that never occur count as zero frequency.
double gini_index(std::span<const data::ItemId> items, std::size_t item_count);

}  // namespace carca::evaluation

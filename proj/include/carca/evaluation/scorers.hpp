#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "carca/data/catalog.hpp"
#include "carca/data/interactions.hpp"
#include "carca/data/splits.hpp"
#include "carca/model/carca_model.hpp"

namespace carca::evaluation {

// Scores candidate items for one held-out case; higher means more likely. Implementations
// must be safe to call concurrently.
class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual std::vector<double> score(const data::EvalCase& eval_case,
                                    std::span<const data::ItemId> candidates) const = 0;
  virtual std::string name() const = 0;
};

// Uniform scores from a hash of (seed, user, item); stateless, so it is order independent.
class RandomScorer final : public Scorer {
 public:
  explicit RandomScorer(std::uint64_t seed) : seed_(seed) {}
  std::vector<double> score(const data::EvalCase& eval_case,
                            std::span<const data::ItemId> candidates) const override;
  std::string name() const override { return "random"; }

 private:
  std::uint64_t seed_;
};

class ConstantScorer final : public Scorer {
 public:
  explicit ConstantScorer(double value = 0.0) : value_(value) {}
  std::vector<double> score(const data::EvalCase& eval_case,
                            std::span<const data::ItemId> candidates) const override;
  std::string name() const override { return "constant"; }

 private:
  double value_;
};

// Ranks by how often each item appears in the training portion of the log.
class PopularityScorer final : public Scorer {
 public:
  // counts[k] is the count of item k+1.
  explicit PopularityScorer(std::vector<double> counts) : counts_(std::move(counts)) {}
  std::vector<double> score(const data::EvalCase& eval_case,
                            std::span<const data::ItemId> candidates) const override;
  std::string name() const override { return "toppop"; }

  double count(data::ItemId item) const;

 private:
  std::vector<double> counts_;
};

// Counts over the training portion (each history without its last two items).
PopularityScorer popularity_baseline(const data::InteractionLog& log);

// Frozen model snapshot. Candidates share the held-out interaction's context row.
class CarcaScorer final : public Scorer {
 public:
  CarcaScorer(const model::CarcaModel& model, const model::ModelParams& params,
              const data::ItemCatalog& catalog)
      : model_(model), params_(params), catalog_(catalog) {}
  std::vector<double> score(const data::EvalCase& eval_case,
                            std::span<const data::ItemId> candidates) const override;
  std::string name() const override { return "carca"; }

 private:
  const model::CarcaModel& model_;
  const model::ModelParams& params_;
  const data::ItemCatalog& catalog_;
};

}  // namespace carca::evaluation

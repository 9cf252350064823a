#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "carca/data/catalog.hpp"
#include "carca/data/splits.hpp"
#include "carca/model/carca_model.hpp"
#include "carca/numerics/random.hpp"
#include "carca/training/adam.hpp"

namespace carca::training {

struct TrainConfig {
  std::size_t epochs = 200;
  std::size_t batch_size = 128;
  std::uint64_t seed = 42;
  // Validation rounds without NDCG@K improvement before stopping; 0 never stops early.
  std::size_t patience = 0;
  // Epochs between validation rounds; 0 disables validation. The last epoch is always
  // validated when validation is on.
  std::size_t eval_every = 1;
  std::size_t val_negatives = 100;
  std::size_t k = 10;
  std::uint64_t val_seed = 1;

  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double loss = 0.0;      // summed BCE plus L2 over all batches of the epoch
  std::optional<double> val_hr;
  std::optional<double> val_ndcg;
};

struct TrainResult {
  model::ModelParams params;  // best validation NDCG, or the last epoch without validation
  std::size_t best_epoch = 0;
  std::optional<double> best_ndcg;
  std::vector<EpochRecord> history;
  bool stopped_early = false;
};

struct TrainHooks {
  std::function<void(const EpochRecord&)> on_epoch;
  // Called with the initial parameters (epoch 0) and after every improvement, so a
  // checkpoint written here survives a later divergence.
  std::function<void(const model::ModelParams&, std::size_t epoch)> on_best;
};

// Positions that receive a training target: every unpadded one, or only the most
// recent under TargetMode::single.
std::vector<std::uint8_t> target_mask(const data::TrainingExample& example, model::TargetMode mode);

// List-wise BCE for one user: positives and their negatives are scored with the same
// context rows and only target-mask positions contribute.
numerics::Var example_loss(const model::CarcaModel& model, model::CarcaModel::Graph& graph,
                           const data::TrainingExample& example);

// One optimizer update on a batch; returns the objective (BCE + L2) before the update.
double train_batch(const model::CarcaModel& model, model::ModelParams& params,
                   OptimizerState& state, const data::ItemCatalog& catalog,
                   std::span<const data::TrainingExample* const> batch, numerics::Rng* dropout_rng);

model::ModelShape shape_for(const data::SplitBundle& bundle, const data::ItemCatalog& catalog);

TrainResult train(const data::SplitBundle& bundle, const data::ItemCatalog& catalog,
                  const model::HyperParams& hp, const TrainConfig& cfg,
                  const TrainHooks& hooks = {}, const model::ModelParams* init = nullptr);

// One JSON object per line: {"epoch":..,"loss":..[,"val_hr":..,"val_ndcg":..]}.
void write_history_line(std::ostream& out, const EpochRecord& record);

}  // namespace carca::training

#include "carca/training/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <string>

#include "carca/data/sampling.hpp"
#include "carca/error.hpp"
#include "carca/evaluation/evaluate.hpp"
#include "carca/training/loss.hpp"
#include "json.hpp"

namespace carca::training {

using model::CarcaModel;
using numerics::Matrix;
using numerics::Var;

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be at least 1");
  if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
  if (k < 1) throw ConfigError("validation cutoff k must be at least 1");
  if (eval_every > 0 && val_negatives < 1) throw ConfigError("validation needs negatives");
}

std::vector<std::uint8_t> target_mask(const data::TrainingExample& example, model::TargetMode mode) {
  std::vector<std::uint8_t> mask(example.mask);
  if (mode == model::TargetMode::single) {
    auto last = std::find(mask.rbegin(), mask.rend(), std::uint8_t{1});
    std::fill(mask.begin(), mask.end(), std::uint8_t{0});
    if (last != mask.rend()) *last = 1;
  }
  return mask;
}

Var example_loss(const CarcaModel& model, CarcaModel::Graph& graph,
                 const data::TrainingExample& example) {
  const std::size_t n = example.profile_items.size();
  if (example.positives.size() != n || example.negatives.size() != n || example.mask.size() != n) {
    throw ShapeError("training example for user " + std::to_string(example.user) +
                     " has inconsistent lengths");
  }
  const auto tmask = target_mask(example, model.hyper_params().target_mode);
  std::vector<std::size_t> active;
  for (std::size_t r = 0; r < n; ++r) {
    if (tmask[r]) active.push_back(r);
  }
  const std::size_t a = active.size();
  const std::size_t l = example.target_ctx.cols();

  std::vector<data::ItemId> targets(2 * a);
  Matrix ctx(2 * a, l);
  for (std::size_t i = 0; i < a; ++i) {
    const std::size_t r = active[i];
    if (example.negatives[r] == data::kPaddingItem) {
      throw ContractError("user " + std::to_string(example.user) + " has no negative at position " +
                          std::to_string(r) + "; call sample_negatives first");
    }
    targets[i] = example.positives[r];
    targets[a + i] = example.negatives[r];
    std::copy_n(example.target_ctx.row(r).begin(), l, ctx.row(i).begin());
    std::copy_n(example.target_ctx.row(r).begin(), l, ctx.row(a + i).begin());
  }
  for (std::size_t i = 0; i < a; ++i) {
    if (!std::equal(ctx.row(i).begin(), ctx.row(i).end(), ctx.row(a + i).begin())) {
      throw ContractError("negative context differs from its positive");
    }
  }

  Var scores = model.forward(graph, example.profile_items, example.profile_ctx, example.mask,
                             targets, ctx);
  std::vector<std::ptrdiff_t> pos_rows(a), neg_rows(a);
  std::iota(pos_rows.begin(), pos_rows.end(), std::ptrdiff_t{0});
  std::iota(neg_rows.begin(), neg_rows.end(), static_cast<std::ptrdiff_t>(a));
  const std::vector<std::uint8_t> ones(a, 1);
  return bce_loss(numerics::gather_rows(scores, pos_rows), numerics::gather_rows(scores, neg_rows),
                  ones);
}

double train_batch(const CarcaModel& model, model::ModelParams& params, OptimizerState& state,
                   const data::ItemCatalog& catalog,
                   std::span<const data::TrainingExample* const> batch, numerics::Rng* dropout_rng) {
  const auto& hp = model.hyper_params();
  numerics::Tape tape;
  const auto leaves = tape.bind(params);
  auto graph = model.make_graph(tape, leaves, catalog, dropout_rng);
  Var total = l2_penalty(tape, leaves, params, hp.l2_weight);
  for (const data::TrainingExample* ex : batch) total = numerics::add(total, example_loss(model, graph, *ex));
  const double loss = total.value()(0, 0);
  if (!std::isfinite(loss)) throw DivergenceError("training loss became non-finite");
  const auto grads = tape.backward(total, params);
  adam_step(params, grads, state, hp.lr);
  return loss;
}

model::ModelShape shape_for(const data::SplitBundle& bundle, const data::ItemCatalog& catalog) {
  if (catalog.item_count() != bundle.item_count) {
    throw ConfigError("catalog has " + std::to_string(catalog.item_count()) + " items, splits have " +
                      std::to_string(bundle.item_count));
  }
  return model::ModelShape{bundle.item_count, catalog.attr_dim(), bundle.ctx_dim};
}

TrainResult train(const data::SplitBundle& bundle, const data::ItemCatalog& catalog,
                  const model::HyperParams& hp, const TrainConfig& cfg, const TrainHooks& hooks,
                  const model::ModelParams* init) {
  cfg.validate();
  if (bundle.train.empty()) throw DataError("no training examples");
  if (bundle.max_len != hp.max_len) {
    throw ConfigError("splits were built with max_len " + std::to_string(bundle.max_len) +
                      ", model expects " + std::to_string(hp.max_len));
  }
  const CarcaModel model(hp, shape_for(bundle, catalog));

  model::ModelParams params;
  if (init) {
    model.check_params(*init);
    params = *init;
  } else {
    numerics::Rng init_rng(numerics::derive_seed({cfg.seed, 0x696e6974}));
    params = model.init_params(init_rng);
  }
  OptimizerState state = OptimizerState::for_params(params);

  TrainResult result;
  result.params = params;
  if (hooks.on_best) hooks.on_best(params, 0);

  std::vector<data::TrainingExample> examples = bundle.train;
  std::vector<std::size_t> order(examples.size());
  std::size_t rounds_without_gain = 0;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    for (auto& ex : examples) {
      numerics::Rng neg_rng(numerics::derive_seed(
          {cfg.seed, 0x6e6567, epoch, static_cast<std::uint64_t>(ex.user)}));
      data::sample_negatives(ex, bundle.item_count, neg_rng);
    }
    std::iota(order.begin(), order.end(), std::size_t{0});
    numerics::Rng shuffle_rng(numerics::derive_seed({cfg.seed, 0x736875, epoch}));
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    EpochRecord record;
    record.epoch = epoch;
    std::vector<const data::TrainingExample*> batch;
    for (std::size_t start = 0, b = 0; start < order.size(); start += cfg.batch_size, ++b) {
      batch.clear();
      for (std::size_t i = start; i < std::min(order.size(), start + cfg.batch_size); ++i) {
        batch.push_back(&examples[order[i]]);
      }
      numerics::Rng dropout_rng(numerics::derive_seed({cfg.seed, 0x64726f70, epoch, b}));
      try {
        record.loss += train_batch(model, params, state, catalog, batch, &dropout_rng);
      } catch (const DivergenceError& e) {
        throw DivergenceError(std::string(e.what()) + " (epoch " + std::to_string(epoch) + ", batch " +
                              std::to_string(b + 1) + "; last good parameters are from epoch " +
                              std::to_string(result.best_epoch) + ")");
      }
    }

    const bool validate_now = cfg.eval_every > 0 && !bundle.validation.empty() &&
                              (epoch % cfg.eval_every == 0 || epoch == cfg.epochs);
    bool improved = false;
    if (validate_now) {
      evaluation::Protocol protocol;
      protocol.k = cfg.k;
      protocol.negatives = cfg.val_negatives;
      protocol.seeds = {cfg.val_seed};
      const evaluation::CarcaScorer scorer(model, params, catalog);
      const auto report = evaluation::evaluate(scorer, bundle.validation, bundle.item_count, protocol);
      record.val_hr = report.hr->mean;
      record.val_ndcg = report.ndcg->mean;
      if (!result.best_ndcg || *record.val_ndcg > *result.best_ndcg) {
        result.best_ndcg = record.val_ndcg;
        improved = true;
        rounds_without_gain = 0;
      } else {
        ++rounds_without_gain;
      }
    } else if (cfg.eval_every == 0 || bundle.validation.empty()) {
      improved = true;
    }
    if (improved) {
      result.params = params;
      result.best_epoch = epoch;
      if (hooks.on_best) hooks.on_best(params, epoch);
    }

    result.history.push_back(record);
    if (hooks.on_epoch) hooks.on_epoch(record);
    if (cfg.patience > 0 && rounds_without_gain >= cfg.patience) {
      result.stopped_early = epoch < cfg.epochs;
      break;
    }
  }
  return result;
}

void write_history_line(std::ostream& out, const EpochRecord& record) {
  nlohmann::json line{{"epoch", record.epoch}, {"loss", record.loss}};
  if (record.val_hr) line["val_hr"] = *record.val_hr;
  if (record.val_ndcg) line["val_ndcg"] = *record.val_ndcg;
  out << line.dump() << '\n';
}

}  // namespace carca::training

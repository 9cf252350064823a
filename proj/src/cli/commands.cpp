#include "carca/cli/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <thread>

#include "carca/data/sampling.hpp"
#include "carca/error.hpp"
#include "carca/evaluation/scorers.hpp"
#include "carca/model/checkpoint.hpp"
#include "carca/training/trainer.hpp"
#include "json.hpp"

namespace carca::cli {
namespace fs = std::filesystem;

namespace {

constexpr const char* kInteractionsFile = "interactions.tsv";
constexpr const char* kAttributesFile = "attributes.tsv";
constexpr const char* kFeaturizerFile = "featurizer.tsv";
constexpr const char* kSplitsFile = "splits.tsv";
constexpr const char* kDatasetFile = "dataset.json";
constexpr const char* kStatsFile = "stats.txt";
constexpr const char* kHistoryFile = "history.jsonl";
constexpr const char* kAblationFile = "ablation.tsv";
constexpr const char* kBenchFile = "bench.json";

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out || !(out << text)) throw DataError("cannot write " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path.string() + " (run `carca prepare` first?)");
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string fixed(double v, int digits = 4) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

std::string hardware_description() {
  std::string cpu = "unknown CPU";
  std::ifstream info("/proc/cpuinfo");
  for (std::string line; std::getline(info, line);) {
    if (line.rfind("model name", 0) == 0) {
      const auto colon = line.find(':');
      if (colon != std::string::npos) cpu = line.substr(line.find_first_not_of(' ', colon + 1));
      break;
    }
  }
  return cpu + ", " + std::to_string(std::max(1u, std::thread::hardware_concurrency())) +
         " hardware threads";
}

evaluation::RankingReport evaluate_params(const RunConfig& config, const data::SplitBundle& bundle,
                                          const data::ItemCatalog& catalog,
                                          const model::CarcaModel& model,
                                          const model::ModelParams& params) {
  const evaluation::CarcaScorer scorer(model, params, catalog);
  return evaluation::evaluate(scorer, bundle.test, bundle.item_count, config.eval.to_protocol());
}

model::ModelParams train_quietly(const RunConfig& config, const data::SplitBundle& bundle,
                                 const data::ItemCatalog& catalog, const model::HyperParams& hp) {
  return training::train(bundle, catalog, hp, config.train).params;
}

}  // namespace

std::string format_stats_table(const std::vector<DatasetStats>& rows) {
  std::ostringstream out;
  out << std::left << std::setw(16) << "Dataset" << std::right << std::setw(10) << "Users"
      << std::setw(10) << "Items" << std::setw(14) << "Interactions" << std::setw(18)
      << "Item Attributes" << '\n';
  for (const auto& r : rows) {
    out << std::left << std::setw(16) << r.name << std::right << std::setw(10) << r.users
        << std::setw(10) << r.items << std::setw(14) << r.interactions << std::setw(18)
        << r.attr_dim << '\n';
  }
  return out.str();
}

std::string format_ablation_table(const std::vector<AblationRow>& rows, std::size_t k) {
  std::ostringstream out;
  const std::string ks = std::to_string(k);
  const bool any_auc = std::any_of(rows.begin(), rows.end(), [](const auto& r) { return r.auc.has_value(); });
  out << "id\tconfiguration\t" << (any_auc ? "NDCG@" + ks + "\tAUC" : "HR@" + ks + "\tNDCG@" + ks)
      << '\n';
  auto cell = [](const std::optional<double>& v) { return v ? fixed(*v) : std::string("-"); };
  for (const auto& r : rows) {
    out << (r.id > 0 ? std::to_string(r.id) : std::string("-")) << '\t' << r.name << '\t';
    if (!r.error.empty()) {
      out << "failed: " << r.error << '\n';
      continue;
    }
    if (any_auc) {
      out << cell(r.ndcg) << '\t' << cell(r.auc) << '\n';
    } else {
      out << cell(r.hr) << '\t' << cell(r.ndcg) << '\n';
    }
  }
  return out.str();
}

DatasetStats cmd_prepare(const RunConfig& config, std::ostream& out) {
  const auto& d = config.data;
  if (d.interactions.empty()) throw ConfigError("[data] interactions is not set");
  if (!fs::exists(d.interactions)) {
    throw ConfigError("interactions file " + d.interactions.string() + " does not exist");
  }
  if (d.use_attributes) {
    if (d.attributes.empty()) {
      throw ConfigError("[data] use_attributes = true but no attributes file is configured; "
                        "set [data] attributes or use_attributes = false");
    }
    if (!fs::exists(d.attributes)) {
      throw ConfigError("attributes file " + d.attributes.string() +
                        " does not exist; fix the path or set [data] use_attributes = false");
    }
  }

  // Attributes are kept whenever a file is configured so later runs can toggle them.
  const bool have_attributes = !d.attributes.empty() && fs::exists(d.attributes);
  std::optional<data::ItemCatalog> catalog;
  if (have_attributes) catalog = data::load_attributes(d.attributes);
  const auto log = data::load_interactions(
      d.interactions, catalog ? std::optional<std::size_t>(catalog->item_count()) : std::nullopt,
      d.min_history);
  if (log.empty()) throw DataError("no user has at least " + std::to_string(d.min_history) + " interactions");
  if (!catalog) catalog = data::ItemCatalog::without_attributes(static_cast<std::size_t>(log.max_item()));
  const auto featurizer = data::fit_normalizer(data::training_portion(log));

  fs::create_directories(d.output_dir);
  data::save_interactions(d.output_dir / kInteractionsFile, log);
  if (have_attributes) {
    data::save_attributes(d.output_dir / kAttributesFile, *catalog);
  } else {
    fs::remove(d.output_dir / kAttributesFile);
  }
  data::save_featurizer(d.output_dir / kFeaturizerFile, featurizer);
  data::save_split_summary(d.output_dir / kSplitsFile, log);

  DatasetStats stats{d.name, log.user_count(), catalog->item_count(), log.interaction_count(),
                     catalog->attr_dim()};
  const nlohmann::json meta{{"name", stats.name},
                            {"users", stats.users},
                            {"items", stats.items},
                            {"interactions", stats.interactions},
                            {"attr_dim", stats.attr_dim}};
  write_text(d.output_dir / kDatasetFile, meta.dump(2) + "\n");
  const std::string table = format_stats_table({stats});
  write_text(d.output_dir / kStatsFile, table);
  out << table;
  return stats;
}

PreparedData load_prepared(const RunConfig& config) {
  const fs::path dir = config.data.output_dir;
  PreparedData p;
  try {
    const auto meta = nlohmann::json::parse(read_text(dir / kDatasetFile));
    p.stats.name = meta.at("name").get<std::string>();
    p.stats.users = meta.at("users").get<std::size_t>();
    p.stats.items = meta.at("items").get<std::size_t>();
    p.stats.interactions = meta.at("interactions").get<std::size_t>();
    p.stats.attr_dim = meta.at("attr_dim").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed " + (dir / kDatasetFile).string() + ": " + e.what());
  }
  p.log = data::load_interactions(dir / kInteractionsFile, p.stats.items, config.data.min_history);
  if (config.data.use_attributes) {
    if (!fs::exists(dir / kAttributesFile)) {
      throw ConfigError("use_attributes = true but " + dir.string() +
                        " holds no attributes; rerun prepare with an attributes file");
    }
    p.catalog = data::load_attributes(dir / kAttributesFile);
    if (p.catalog.item_count() != p.stats.items) {
      throw DataError("prepared attributes cover " + std::to_string(p.catalog.item_count()) +
                      " items, dataset has " + std::to_string(p.stats.items));
    }
  } else {
    p.catalog = data::ItemCatalog::without_attributes(p.stats.items);
  }
  p.featurizer = data::load_featurizer(dir / kFeaturizerFile);
  return p;
}

data::SplitBundle build_bundle(const RunConfig& config, const PreparedData& prepared,
                               const model::HyperParams& hp) {
  return data::build_splits(prepared.log, hp.max_len, prepared.catalog, prepared.featurizer,
                            data::FeatureOptions{config.data.use_context});
}

void cmd_train(const RunConfig& config, std::ostream& out) {
  const auto hp = config.effective_model();
  const auto prepared = load_prepared(config);
  const auto bundle = build_bundle(config, prepared, hp);
  const model::ModelShape shape = training::shape_for(bundle, prepared.catalog);

  const fs::path checkpoint = config.checkpoint_path();
  if (checkpoint.has_parent_path()) fs::create_directories(checkpoint.parent_path());
  std::ofstream history(config.data.output_dir / kHistoryFile, std::ios::trunc);
  if (!history) throw DataError("cannot write training history");

  training::TrainHooks hooks;
  hooks.on_epoch = [&](const training::EpochRecord& r) {
    training::write_history_line(history, r);
    history.flush();
    out << "epoch " << r.epoch << " loss " << fixed(r.loss);
    if (r.val_ndcg) out << " val HR@" << config.train.k << ' ' << fixed(*r.val_hr) << " NDCG@" << config.train.k << ' ' << fixed(*r.val_ndcg);
    out << '\n';
  };
  hooks.on_best = [&](const model::ModelParams& params, std::size_t) {
    model::save_checkpoint(checkpoint, model::Checkpoint{hp, shape, params});
  };
  const auto result = training::train(bundle, prepared.catalog, hp, config.train, hooks);
  out << "best epoch " << result.best_epoch;
  if (result.best_ndcg) out << " (validation NDCG@" << config.train.k << ' ' << fixed(*result.best_ndcg) << ')';
  if (result.stopped_early) out << ", stopped early";
  out << "\ncheckpoint written to " << checkpoint.string() << '\n';
}

evaluation::RankingReport cmd_eval(const RunConfig& config, std::ostream& out) {
  const auto hp = config.effective_model();
  const auto prepared = load_prepared(config);
  const auto bundle = build_bundle(config, prepared, hp);
  const auto protocol = config.eval.to_protocol();

  evaluation::RankingReport report;
  if (config.eval.scorer == "toppop") {
    report = evaluation::evaluate(evaluation::popularity_baseline(prepared.log), bundle.test,
                                  bundle.item_count, protocol);
  } else if (config.eval.scorer == "random") {
    report = evaluation::evaluate(evaluation::RandomScorer(config.train.seed), bundle.test,
                                  bundle.item_count, protocol);
  } else {
    const model::CarcaModel model(hp, training::shape_for(bundle, prepared.catalog));
    const auto params = model::load_params_for(config.checkpoint_path(), model);
    report = evaluate_params(config, bundle, prepared.catalog, model, params);
  }

  const std::string name =
      config.eval.protocol == evaluation::ProtocolKind::auc ? "report_auc.json" : "report.json";
  evaluation::save_report(config.data.output_dir / name, report);
  const std::string ks = std::to_string(report.k);
  out << report.scorer << " on " << report.users << " users, " << report.negatives << " negatives, "
      << report.runs.size() << " runs\n";
  if (report.hr) out << "HR@" << ks << "   " << fixed(report.hr->mean) << " +- " << fixed(report.hr->std) << '\n';
  if (report.ndcg) out << "NDCG@" << ks << " " << fixed(report.ndcg->mean) << " +- " << fixed(report.ndcg->std) << '\n';
  if (report.auc) out << "AUC     " << fixed(report.auc->mean) << " +- " << fixed(report.auc->std) << '\n';
  out << "report written to " << (config.data.output_dir / name).string() << '\n';
  return report;
}

std::vector<AblationRow> cmd_ablate(const RunConfig& config, std::ostream& out) {
  std::vector<int> ids = config.sweep.ids;
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());

  struct Job {
    int id;
    std::string name;
    RunConfig config;
  };
  std::vector<Job> jobs;
  for (int id : ids) {
    RunConfig c = config;
    c.ablation = id;
    jobs.push_back({id, std::string(model::ablation_name(id)), c});
  }
  if (config.sweep.feature_grid) {
    for (bool attrs : {false, true}) {
      for (bool ctx : {false, true}) {
        RunConfig c = config;
        c.ablation = 1;
        c.data.use_attributes = attrs;
        c.data.use_context = ctx;
        jobs.push_back({0, std::string("attributes ") + (attrs ? "on" : "off") + ", context " + (ctx ? "on" : "off"), c});
      }
    }
  }

  std::vector<AblationRow> rows;
  for (const auto& job : jobs) {
    AblationRow row{job.id, job.name, {}, {}, {}, {}};
    try {
      const auto hp = job.config.effective_model();
      hp.validate();
      const auto prepared = load_prepared(job.config);
      const auto bundle = build_bundle(job.config, prepared, hp);
      const model::CarcaModel model(hp, training::shape_for(bundle, prepared.catalog));
      const auto params = train_quietly(job.config, bundle, prepared.catalog, hp);
      const auto report = evaluate_params(job.config, bundle, prepared.catalog, model, params);
      if (report.hr) row.hr = report.hr->mean;
      if (report.ndcg) row.ndcg = report.ndcg->mean;
      if (report.auc) row.auc = report.auc->mean;
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    out << "finished " << row.name << (row.error.empty() ? "" : " (failed)") << '\n';
    rows.push_back(std::move(row));
  }
  const std::string table = format_ablation_table(rows, config.eval.k);
  write_text(config.data.output_dir / kAblationFile, table);
  out << table;
  return rows;
}

void cmd_bench(const RunConfig& config, std::ostream& out) {
  const auto hp = config.effective_model();
  const auto prepared = load_prepared(config);
  const auto bundle = build_bundle(config, prepared, hp);
  if (bundle.train.empty()) throw DataError("no training examples to benchmark with");
  const model::CarcaModel model(hp, training::shape_for(bundle, prepared.catalog));

  model::ModelParams params;
  const bool from_checkpoint = fs::exists(config.checkpoint_path());
  if (from_checkpoint) {
    params = model::load_params_for(config.checkpoint_path(), model);
  } else {
    numerics::Rng rng(numerics::derive_seed({config.train.seed, 0x696e6974}));
    params = model.init_params(rng);
  }

  std::vector<data::TrainingExample> examples;
  numerics::Rng neg_rng(config.train.seed);
  for (std::size_t i = 0; i < config.bench.batch_size; ++i) {
    examples.push_back(bundle.train[i % bundle.train.size()]);
    data::sample_negatives(examples.back(), bundle.item_count, neg_rng);
  }
  std::vector<const data::TrainingExample*> batch;
  for (const auto& ex : examples) batch.push_back(&ex);

  auto state = training::OptimizerState::for_params(params);
  numerics::Rng dropout_rng(config.train.seed);
  for (std::size_t i = 0; i < config.bench.warmup; ++i) {
    training::train_batch(model, params, state, prepared.catalog, batch, &dropout_rng);
  }
  std::vector<double> seconds;
  for (std::size_t i = 0; i < config.bench.iterations; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    training::train_batch(model, params, state, prepared.catalog, batch, &dropout_rng);
    seconds.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  double mean = 0.0;
  for (double s : seconds) mean += s;
  mean /= static_cast<double>(seconds.size());
  double var = 0.0;
  for (double s : seconds) var += (s - mean) * (s - mean);
  const double stdev = seconds.size() > 1 ? std::sqrt(var / static_cast<double>(seconds.size() - 1)) : 0.0;

  const std::string hardware = hardware_description();
  const nlohmann::json doc{{"batch_size", config.bench.batch_size},
                           {"warmup", config.bench.warmup},
                           {"iterations", config.bench.iterations},
                           {"mean_seconds", mean},
                           {"std_seconds", stdev},
                           {"params", from_checkpoint ? "checkpoint" : "fresh"},
                           {"hardware", hardware}};
  write_text(config.data.output_dir / kBenchFile, doc.dump(2) + "\n");
  out << "batch size " << config.bench.batch_size << ", " << config.bench.iterations
      << " timed iterations after " << config.bench.warmup << " warm-up\n"
      << "mean " << fixed(mean, 6) << " s, std " << fixed(stdev, 6) << " s per batch\n"
      << "hardware: " << hardware << '\n';
}

int report_failure(std::exception_ptr error, std::ostream& err) {
  try {
    std::rethrow_exception(error);
  } catch (const DivergenceError& e) {
    err << "error: training diverged: " << e.what() << '\n';
    return kExitDivergence;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DataError& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const CheckpointError& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }
}

}  // namespace carca::cli

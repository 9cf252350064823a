#include <ostream>

#include "CLI11.hpp"
#include "carca/cli/commands.hpp"
#include "carca/error.hpp"

namespace carca::cli {

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Context and attribute-aware sequential recommender"};
  app.require_subcommand(1);

  std::string config_path;
  std::string output_dir;
  std::string checkpoint;
  std::string protocol;
  std::string scorer;
  std::optional<std::size_t> epochs;
  std::optional<std::uint64_t> seed;
  std::optional<int> ablation;
  std::vector<int> ids;
  bool features = false;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("-c,--config", config_path, "INI config file")->required()->check(CLI::ExistingFile);
    cmd->add_option("-o,--output-dir", output_dir, "override [data] output_dir");
  };
  auto* prepare = app.add_subcommand("prepare", "filter the raw log, fit context scaling, write splits");
  add_common(prepare);
  auto* train = app.add_subcommand("train", "train a model and write the best checkpoint");
  add_common(train);
  train->add_option("--epochs", epochs, "override [train] epochs");
  train->add_option("--seed", seed, "override [train] seed");
  train->add_option("--ablation", ablation, "configuration id 1..8");
  train->add_option("--checkpoint", checkpoint, "checkpoint path");
  auto* eval = app.add_subcommand("eval", "rank held-out test items");
  add_common(eval);
  eval->add_option("--checkpoint", checkpoint, "checkpoint path");
  eval->add_option("--protocol", protocol, "ranking or auc")->check(CLI::IsMember({"ranking", "auc"}));
  eval->add_option("--scorer", scorer, "carca, toppop or random")
      ->check(CLI::IsMember({"carca", "toppop", "random"}));
  eval->add_option("--ablation", ablation, "configuration id the checkpoint was trained with");
  auto* ablate = app.add_subcommand("ablate", "train and evaluate several configurations");
  add_common(ablate);
  ablate->add_option("--ids", ids, "configuration ids, overrides [ablation] ids")->delimiter(',');
  ablate->add_flag("--features", features, "also sweep attribute/context toggles");
  ablate->add_option("--epochs", epochs, "override [train] epochs");
  auto* bench = app.add_subcommand("bench", "time training batches");
  add_common(bench);
  bench->add_option("--checkpoint", checkpoint, "checkpoint path");
  auto* show = app.add_subcommand("config", "print the fully resolved config");
  add_common(show);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    RunConfig config = load_config(config_path);
    if (!output_dir.empty()) config.data.output_dir = output_dir;
    if (!checkpoint.empty()) config.eval.checkpoint = checkpoint;
    if (!protocol.empty()) {
      const auto kind = evaluation::parse_protocol_kind(protocol);
      const std::size_t ranking_n = evaluation::Protocol::ranking().negatives;
      const std::size_t auc_n = evaluation::Protocol::auc_protocol().negatives;
      // An explicitly configured negative count survives the switch.
      if (kind == evaluation::ProtocolKind::auc && config.eval.negatives == ranking_n) config.eval.negatives = auc_n;
      if (kind == evaluation::ProtocolKind::ranking && config.eval.negatives == auc_n) config.eval.negatives = ranking_n;
      config.eval.protocol = kind;
    }
    if (!scorer.empty()) config.eval.scorer = scorer;
    if (epochs) config.train.epochs = *epochs;
    if (seed) config.train.seed = *seed;
    if (ablation) config.ablation = *ablation;
    if (!ids.empty()) config.sweep.ids = ids;
    if (features) config.sweep.feature_grid = true;
    config.validate();

    if (prepare->parsed()) {
      cmd_prepare(config, out);
    } else if (train->parsed()) {
      cmd_train(config, out);
    } else if (eval->parsed()) {
      cmd_eval(config, out);
    } else if (ablate->parsed()) {
      cmd_ablate(config, out);
    } else if (bench->parsed()) {
      cmd_bench(config, out);
    } else if (show->parsed()) {
      out << serialize_config(config);
    }
  } catch (...) {
    return report_failure(std::current_exception(), err);
  }
  return kExitOk;
}

}  // namespace carca::cli

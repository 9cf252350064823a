#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "carca/cli/config.hpp"
#include "carca/data/catalog.hpp"
#include "carca/data/context.hpp"
#include "carca/data/interactions.hpp"
#include "carca/data/splits.hpp"
#include "carca/evaluation/evaluate.hpp"

namespace carca::cli {

// Process exit statuses.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitDivergence = 3;

struct DatasetStats {
  std::string name;
  std::size_t users = 0;
  std::size_t items = 0;
  std::size_t interactions = 0;
  std::size_t attr_dim = 0;
};

// Rendered like the usual dataset statistics table.
std::string format_stats_table(const std::vector<DatasetStats>& rows);

// Files written by prepare and read by the other commands.
struct PreparedData {
  data::InteractionLog log;
  data::ItemCatalog catalog;  // honors use_attributes
  data::ContextFeaturizer featurizer;
  DatasetStats stats;
};

PreparedData load_prepared(const RunConfig& config);
data::SplitBundle build_bundle(const RunConfig& config, const PreparedData& prepared,
                               const model::HyperParams& hp);

struct AblationRow {
  int id = 0;
  std::string name;
  std::optional<double> hr;
  std::optional<double> ndcg;
  std::optional<double> auc;
  std::string error;  // non-empty when this configuration failed
};

std::string format_ablation_table(const std::vector<AblationRow>& rows, std::size_t k);

// Each command reads and writes files under config.data.output_dir and reports to `out`.
DatasetStats cmd_prepare(const RunConfig& config, std::ostream& out);
void cmd_train(const RunConfig& config, std::ostream& out);
evaluation::RankingReport cmd_eval(const RunConfig& config, std::ostream& out);
std::vector<AblationRow> cmd_ablate(const RunConfig& config, std::ostream& out);
void cmd_bench(const RunConfig& config, std::ostream& out);

// Maps a thrown exception to an exit status and prints it to `err`.
int report_failure(std::exception_ptr error, std::ostream& err);

// Full command-line entry point; returns the process exit status.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace carca::cli

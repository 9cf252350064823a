#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "carca/evaluation/evaluate.hpp"
#include "carca/model/hyper_params.hpp"
#include "carca/training/trainer.hpp"

namespace carca::cli {

struct DataSection {
  std::string name = "dataset";
  std::filesystem::path interactions;
  std::filesystem::path attributes;  // empty: no attribute file
  std::filesystem::path output_dir = "carca_out";
  bool use_attributes = true;
  bool use_context = true;
  std::size_t min_history = 3;

  bool operator==(const DataSection&) const = default;
};

struct EvalSection {
  evaluation::ProtocolKind protocol = evaluation::ProtocolKind::ranking;
  std::size_t k = 10;
  std::size_t negatives = 100;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::string scorer = "carca";          // carca | toppop | random
  std::filesystem::path checkpoint;      // empty: <output_dir>/checkpoint.bin

  evaluation::Protocol to_protocol() const;
  bool operator==(const EvalSection&) const = default;
};

struct AblationSection {
  std::vector<int> ids{1};
  // Also sweep (use_attributes, use_context) over {off, on} x {off, on} with config 1.
  bool feature_grid = false;

  bool operator==(const AblationSection&) const = default;
};

struct BenchSection {
  std::size_t batch_size = 128;
  std::size_t warmup = 5;
  std::size_t iterations = 50;

  bool operator==(const BenchSection&) const = default;
};

struct RunConfig {
  DataSection data;
  model::HyperParams model;  // before the ablation override
  int ablation = 1;
  training::TrainConfig train;
  EvalSection eval;
  AblationSection sweep;
  BenchSection bench;

  // Hyper-parameters with the ablation override applied.
  model::HyperParams effective_model() const;
  std::filesystem::path checkpoint_path() const;
  void validate() const;

  bool operator==(const RunConfig&) const = default;
};

// INI text with sections [data] [model] [train] [eval] [ablation] [bench]. Unknown keys
// are rejected. [model] preset = <dataset> loads a preset before the other model keys.
// Relative paths are resolved against base_dir when it is non-empty.
RunConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);
// Writes every field explicitly, so parse_config(serialize_config(c)) == c.
std::string serialize_config(const RunConfig& config);

}  // namespace carca::cli

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>

#include "carca/model/carca_model.hpp"
#include "carca/model/hyper_params.hpp"

namespace carca::model {

// Binary layout, all integers and floats little-endian:
//
//   magic        8 bytes  "CARCACKP"
//   version      u32      kCheckpointVersion
//   d g heads blocks max_len output_blocks            u64 each
//   dropout l2_weight lr leaky_slope                  f64 each
//   residual scoring positional layout target ca_res  u8 each
//   item_count attr_dim ctx_dim                       u64 each
//   tensor count u64, then per tensor:
//     name length u32, name bytes, is_weight u8, rows u64, cols u64, rows*cols f64 (row-major)
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  HyperParams hp;
  ModelShape shape;
  ModelParams params;
};

void write_checkpoint(std::ostream& out, const Checkpoint& ckp);
Checkpoint read_checkpoint(std::istream& in);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckp);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Loads and verifies that the stored parameters fit `model`; throws CheckpointError otherwise.
ModelParams load_params_for(const std::filesystem::path& path, const CarcaModel& model);

}  // namespace carca::model

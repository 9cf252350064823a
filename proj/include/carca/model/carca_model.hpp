#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "carca/data/catalog.hpp"
#include "carca/data/interactions.hpp"
#include "carca/model/hyper_params.hpp"
#include "carca/numerics/matrix.hpp"
#include "carca/numerics/parameters.hpp"
#include "carca/numerics/random.hpp"
#include "carca/numerics/tape.hpp"

namespace carca::model {

using ModelParams = numerics::ParameterSet;
using numerics::Matrix;
using numerics::Var;

// Input dimensions the parameters are sized for. ctx_dim is the width of the context
// rows handed to the model (0 when context is switched off).
struct ModelShape {
  std::size_t item_count = 0;
  std::size_t attr_dim = 0;
  std::size_t ctx_dim = 0;

  bool operator==(const ModelShape&) const = default;
};

// Scaled dot-product attention, one head per entry of the spans; head outputs are
// concatenated column-wise. Keys with key_mask 0 receive zero weight.
Var attention(std::span<const Var> queries, std::span<const Var> keys, std::span<const Var> values,
              std::span<const std::uint8_t> key_mask);
// Same, with q/k/v already projected to full width and split into `heads` column blocks.
Var attention(Var q, Var k, Var v, std::size_t heads, std::span<const std::uint8_t> key_mask);

// Fixed sinusoidal encodings, rows = positions, cols = width.
Matrix sinusoidal_positions(std::size_t rows, std::size_t width);

class CarcaModel {
 public:
  struct BlockSlots {
    std::vector<std::size_t> query, key, value;  // one per head, d x d/H
    std::size_t ln1_gain, ln1_bias, w1, b1, w2, b2, ln2_gain, ln2_bias;
  };

  // Everything a forward pass needs besides the inputs.
  struct Graph {
    numerics::Tape& tape;
    std::span<const Var> params;
    Var attributes;                     // I x j catalog attributes (constant)
    numerics::Rng* dropout_rng = nullptr;  // null disables dropout
  };

  CarcaModel(HyperParams hp, ModelShape shape);

  const HyperParams& hyper_params() const noexcept { return hp_; }
  const ModelShape& shape() const noexcept { return shape_; }

  // Glorot-uniform weights, zero biases, unit layer-norm gains.
  ModelParams init_params(numerics::Rng& rng) const;
  // Throws CheckpointError unless names and shapes match this model exactly.
  void check_params(const ModelParams& params) const;

  Graph make_graph(numerics::Tape& tape, std::span<const Var> params,
                   const data::ItemCatalog& catalog, numerics::Rng* dropout_rng) const;

  // m x d item embeddings; rows for kPaddingItem are zero.
  Var embed_items(Graph& g, std::span<const data::ItemId> items, const Matrix& ctx) const;
  // Profile embeddings E^P including positional encodings and embedding dropout.
  Var embed_profile(Graph& g, std::span<const data::ItemId> items, const Matrix& ctx,
                    std::span<const std::uint8_t> mask) const;
  Var self_attention_block(Graph& g, Var input, const BlockSlots& block,
                           std::span<const std::uint8_t> mask) const;
  Var encode_profile(Graph& g, Var profile_embeddings, std::span<const std::uint8_t> mask) const;
  // m x 1 scores in (0, 1).
  Var score_targets(Graph& g, Var target_embeddings, Var profile_features,
                    std::span<const std::uint8_t> mask) const;

  // Profile and targets through the whole network.
  Var forward(Graph& g, std::span<const data::ItemId> profile_items, const Matrix& profile_ctx,
              std::span<const std::uint8_t> mask, std::span<const data::ItemId> targets,
              const Matrix& target_ctx) const;

  // Inference without dropout or gradient recording.
  std::vector<double> score(const ModelParams& params, const data::ItemCatalog& catalog,
                            std::span<const data::ItemId> profile_items, const Matrix& profile_ctx,
                            std::span<const std::uint8_t> mask,
                            std::span<const data::ItemId> targets, const Matrix& target_ctx) const;

  const std::vector<BlockSlots>& profile_blocks() const noexcept { return blocks_; }

 private:
  enum class Init { glorot, zeros, ones };
  struct Slot {
    std::string name;
    std::size_t rows, cols;
    Init init;
  };

  std::size_t add_slot(std::string name, std::size_t rows, std::size_t cols, Init init);
  BlockSlots add_block(const std::string& prefix);
  Var residual(Var x, Var sublayer) const;
  bool uses_context() const noexcept;

  static constexpr std::size_t kNone = static_cast<std::size_t>(-1);

  HyperParams hp_;
  ModelShape shape_;
  std::vector<Slot> slots_;

  // Embedding pipeline; which slots exist depends on the feature layout.
  std::size_t item_weight_ = kNone, item_bias_ = kNone, item_attr_weight_ = kNone;
  std::size_t side_weight_ = kNone, side_bias_ = kNone;
  std::size_t out_weight_ = kNone, out_bias_ = kNone;

  std::vector<BlockSlots> blocks_;
  std::vector<std::size_t> cross_query_, cross_key_, cross_value_;
  std::vector<BlockSlots> output_blocks_;
  std::size_t score_weight_ = kNone, score_bias_ = kNone;
};

}  // namespace carca::model

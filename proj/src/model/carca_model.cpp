#include "carca/model/carca_model.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "carca/error.hpp"
#include "carca/numerics/kernels.hpp"

namespace carca::model {

using numerics::Tape;

Var attention(std::span<const Var> queries, std::span<const Var> keys, std::span<const Var> values,
              std::span<const std::uint8_t> key_mask) {
  if (queries.empty() || queries.size() != keys.size() || keys.size() != values.size()) {
    throw ShapeError("attention: need the same positive number of query, key and value heads");
  }
  std::vector<Var> heads;
  heads.reserve(queries.size());
  for (std::size_t h = 0; h < queries.size(); ++h) {
    const double inv_scale = 1.0 / std::sqrt(static_cast<double>(keys[h].cols()));
    Var logits = numerics::scale(numerics::matmul_nt(queries[h], keys[h]), inv_scale);
    Var weights = numerics::masked_softmax_rows(logits, key_mask);
    heads.push_back(numerics::matmul(weights, values[h]));
  }
  return heads.size() == 1 ? heads.front() : numerics::concat_cols(heads);
}

Var attention(Var q, Var k, Var v, std::size_t heads, std::span<const std::uint8_t> key_mask) {
  if (heads == 0 || q.cols() % heads != 0 || k.cols() != q.cols() || v.cols() % heads != 0) {
    throw ConfigError("attention: width " + std::to_string(q.cols()) + " cannot be split into " +
                      std::to_string(heads) + " heads");
  }
  const std::size_t qk_width = q.cols() / heads;
  const std::size_t v_width = v.cols() / heads;
  std::vector<Var> qs, ks, vs;
  for (std::size_t h = 0; h < heads; ++h) {
    qs.push_back(numerics::slice_cols(q, h * qk_width, qk_width));
    ks.push_back(numerics::slice_cols(k, h * qk_width, qk_width));
    vs.push_back(numerics::slice_cols(v, h * v_width, v_width));
  }
  return attention(qs, ks, vs, key_mask);
}

Matrix sinusoidal_positions(std::size_t rows, std::size_t width) {
  Matrix pe(rows, width);
  for (std::size_t pos = 0; pos < rows; ++pos) {
    for (std::size_t i = 0; i < width; ++i) {
      const double exponent = static_cast<double>(2 * (i / 2)) / static_cast<double>(width);
      const double angle = static_cast<double>(pos) / std::pow(10000.0, exponent);
      pe(pos, i) = i % 2 == 0 ? std::sin(angle) : std::cos(angle);
    }
  }
  return pe;
}

CarcaModel::CarcaModel(HyperParams hp, ModelShape shape) : hp_(hp), shape_(shape) {
  hp_.validate();
  if (shape_.item_count == 0) throw ConfigError("model needs at least one item");
  const std::size_t d = hp_.d;
  const std::size_t g = hp_.g;
  const std::size_t j = shape_.attr_dim;
  const std::size_t l = uses_context() ? shape_.ctx_dim : 0;
  const std::size_t items = shape_.item_count;

  switch (hp_.layout) {
    case FeatureLayout::separate:
      item_weight_ = add_slot("embed.item.weight", items, d, Init::glorot);
      item_bias_ = add_slot("embed.item.bias", 1, d, Init::zeros);
      side_weight_ = add_slot("embed.side.weight", j + l, g, Init::glorot);
      side_bias_ = add_slot("embed.side.bias", 1, g, Init::zeros);
      out_weight_ = add_slot("embed.merge.weight", d + g, d, Init::glorot);
      out_bias_ = add_slot("embed.merge.bias", 1, d, Init::zeros);
      break;
    case FeatureLayout::concat_all:
      item_weight_ = add_slot("embed.item.weight", items, d, Init::glorot);
      side_weight_ = add_slot("embed.side.weight", j + l, d, Init::glorot);
      out_bias_ = add_slot("embed.merge.bias", 1, d, Init::zeros);
      break;
    case FeatureLayout::concat_item:
      item_weight_ = add_slot("embed.item.weight", items, d, Init::glorot);
      item_attr_weight_ = add_slot("embed.item_attr.weight", j, d, Init::glorot);
      item_bias_ = add_slot("embed.item.bias", 1, d, Init::zeros);
      side_weight_ = add_slot("embed.side.weight", l, g, Init::glorot);
      side_bias_ = add_slot("embed.side.bias", 1, g, Init::zeros);
      out_weight_ = add_slot("embed.merge.weight", d + g, d, Init::glorot);
      out_bias_ = add_slot("embed.merge.bias", 1, d, Init::zeros);
      break;
  }

  for (std::size_t b = 0; b < hp_.blocks; ++b) blocks_.push_back(add_block("block" + std::to_string(b)));

  if (hp_.scoring == ScoringMode::cross_attention) {
    const std::size_t w = d / hp_.heads;
    for (std::size_t h = 0; h < hp_.heads; ++h) {
      const std::string p = "cross.head" + std::to_string(h);
      cross_query_.push_back(add_slot(p + ".query", d, w, Init::glorot));
      cross_key_.push_back(add_slot(p + ".key", d, w, Init::glorot));
      cross_value_.push_back(add_slot(p + ".value", d, w, Init::glorot));
    }
    for (std::size_t b = 0; b < hp_.output_blocks; ++b) {
      output_blocks_.push_back(add_block("output_block" + std::to_string(b)));
    }
    score_weight_ = add_slot("output.weight", d, 1, Init::glorot);
    score_bias_ = add_slot("output.bias", 1, 1, Init::zeros);
  }
}

bool CarcaModel::uses_context() const noexcept {
  return hp_.positional == PositionalMode::context;
}

std::size_t CarcaModel::add_slot(std::string name, std::size_t rows, std::size_t cols, Init init) {
  slots_.push_back(Slot{std::move(name), rows, cols, init});
  return slots_.size() - 1;
}

CarcaModel::BlockSlots CarcaModel::add_block(const std::string& prefix) {
  const std::size_t d = hp_.d;
  const std::size_t w = d / hp_.heads;
  BlockSlots b;
  for (std::size_t h = 0; h < hp_.heads; ++h) {
    const std::string p = prefix + ".attn.head" + std::to_string(h);
    b.query.push_back(add_slot(p + ".query", d, w, Init::glorot));
    b.key.push_back(add_slot(p + ".key", d, w, Init::glorot));
    b.value.push_back(add_slot(p + ".value", d, w, Init::glorot));
  }
  b.ln1_gain = add_slot(prefix + ".ln1.gain", 1, d, Init::ones);
  b.ln1_bias = add_slot(prefix + ".ln1.bias", 1, d, Init::zeros);
  b.w1 = add_slot(prefix + ".ffn.w1", d, d, Init::glorot);
  b.b1 = add_slot(prefix + ".ffn.b1", 1, d, Init::zeros);
  b.w2 = add_slot(prefix + ".ffn.w2", d, d, Init::glorot);
  b.b2 = add_slot(prefix + ".ffn.b2", 1, d, Init::zeros);
  b.ln2_gain = add_slot(prefix + ".ln2.gain", 1, d, Init::ones);
  b.ln2_bias = add_slot(prefix + ".ln2.bias", 1, d, Init::zeros);
  return b;
}

ModelParams CarcaModel::init_params(numerics::Rng& rng) const {
  ModelParams params;
  for (const auto& slot : slots_) {
    Matrix m(slot.rows, slot.cols);
    switch (slot.init) {
      case Init::glorot: {
        const double bound =
            std::sqrt(6.0 / static_cast<double>(std::max<std::size_t>(slot.rows + slot.cols, 1)));
        for (double& v : m.data()) v = (2.0 * numerics::uniform01(rng) - 1.0) * bound;
        break;
      }
      case Init::zeros:
        break;
      case Init::ones:
        for (double& v : m.data()) v = 1.0;
        break;
    }
    params.add(slot.name, std::move(m), slot.init == Init::glorot);
  }
  return params;
}

void CarcaModel::check_params(const ModelParams& params) const {
  if (params.size() != slots_.size()) {
    throw CheckpointError("expected " + std::to_string(slots_.size()) + " parameter tensors, got " +
                          std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < slots_.size(); ++i) {
    const auto& p = params[i];
    const auto& s = slots_[i];
    if (p.name != s.name || p.value.rows() != s.rows || p.value.cols() != s.cols) {
      throw CheckpointError("parameter " + std::to_string(i) + " is '" + p.name + "' " +
                            p.value.shape_string() + ", model expects '" + s.name + "' " +
                            std::to_string(s.rows) + "x" + std::to_string(s.cols));
    }
  }
}

CarcaModel::Graph CarcaModel::make_graph(Tape& tape, std::span<const Var> params,
                                         const data::ItemCatalog& catalog,
                                         numerics::Rng* dropout_rng) const {
  if (params.size() != slots_.size()) throw ContractError("parameter binding does not match model");
  if (catalog.item_count() != shape_.item_count || catalog.attr_dim() != shape_.attr_dim) {
    throw ConfigError("catalog (" + std::to_string(catalog.item_count()) + " items, " +
                      std::to_string(catalog.attr_dim()) + " attributes) does not match model (" +
                      std::to_string(shape_.item_count) + ", " + std::to_string(shape_.attr_dim) +
                      ")");
  }
  return Graph{tape, params, tape.reference(catalog.attributes()), dropout_rng};
}

Var CarcaModel::residual(Var x, Var sublayer) const {
  return hp_.residual == ResidualMode::multiplicative ? numerics::mul(x, sublayer)
                                                      : numerics::add(x, sublayer);
}

Var CarcaModel::embed_items(Graph& g, std::span<const data::ItemId> items, const Matrix& ctx) const {
  Tape& tape = g.tape;
  const auto P = g.params;
  const std::size_t m = items.size();

  std::vector<std::ptrdiff_t> rows(m);
  std::vector<std::uint8_t> present(m);
  for (std::size_t r = 0; r < m; ++r) {
    const data::ItemId item = items[r];
    if (item == data::kPaddingItem) {
      rows[r] = -1;
      continue;
    }
    if (item < 1 || static_cast<std::size_t>(item) > shape_.item_count) {
      throw ReferentialError("no attribute row for item " + std::to_string(item));
    }
    rows[r] = item - 1;
    present[r] = 1;
  }

  Var attrs = numerics::gather_rows(g.attributes, rows);
  Var context;
  if (uses_context()) {
    if (ctx.rows() != m || ctx.cols() != shape_.ctx_dim) {
      throw ShapeError("context rows " + ctx.shape_string() + " for " + std::to_string(m) +
                       " items of context width " + std::to_string(shape_.ctx_dim));
    }
    context = tape.reference(ctx);
  } else {
    context = tape.constant(Matrix(m, 0));
  }

  Var id_part = numerics::gather_rows(P[item_weight_], rows);
  Var e;
  switch (hp_.layout) {
    case FeatureLayout::separate: {
      Var z = numerics::add_row(id_part, P[item_bias_]);
      const std::array<Var, 2> side{attrs, context};
      Var q = numerics::add_row(numerics::matmul(numerics::concat_cols(side), P[side_weight_]),
                                P[side_bias_]);
      const std::array<Var, 2> zq{z, q};
      e = numerics::add_row(numerics::matmul(numerics::concat_cols(zq), P[out_weight_]),
                            P[out_bias_]);
      break;
    }
    case FeatureLayout::concat_all: {
      const std::array<Var, 2> side{attrs, context};
      Var s = numerics::matmul(numerics::concat_cols(side), P[side_weight_]);
      e = numerics::add_row(numerics::add(id_part, s), P[out_bias_]);
      break;
    }
    case FeatureLayout::concat_item: {
      Var z = numerics::add_row(numerics::add(id_part, numerics::matmul(attrs, P[item_attr_weight_])),
                                P[item_bias_]);
      Var q = numerics::add_row(numerics::matmul(context, P[side_weight_]), P[side_bias_]);
      const std::array<Var, 2> zq{z, q};
      e = numerics::add_row(numerics::matmul(numerics::concat_cols(zq), P[out_weight_]),
                            P[out_bias_]);
      break;
    }
  }
  return numerics::mask_rows(e, present);
}

Var CarcaModel::embed_profile(Graph& g, std::span<const data::ItemId> items, const Matrix& ctx,
                              std::span<const std::uint8_t> mask) const {
  Var e = embed_items(g, items, ctx);
  if (hp_.positional == PositionalMode::positional_encoding) {
    e = numerics::add(e, g.tape.constant(sinusoidal_positions(items.size(), hp_.d)));
  }
  e = numerics::mask_rows(e, mask);
  return numerics::dropout(e, hp_.dropout, g.dropout_rng);
}

Var CarcaModel::self_attention_block(Graph& g, Var input, const BlockSlots& block,
                                     std::span<const std::uint8_t> mask) const {
  const auto P = g.params;
  std::vector<Var> qs, ks, vs;
  for (std::size_t h = 0; h < block.query.size(); ++h) {
    qs.push_back(numerics::matmul(input, P[block.query[h]]));
    ks.push_back(numerics::matmul(input, P[block.key[h]]));
    vs.push_back(numerics::matmul(input, P[block.value[h]]));
  }
  Var s = numerics::dropout(attention(qs, ks, vs, mask), hp_.dropout, g.dropout_rng);
  Var x1 = numerics::layer_norm_rows(residual(input, s), P[block.ln1_gain], P[block.ln1_bias],
                                     numerics::kLayerNormEps);

  Var hidden = numerics::leaky_relu(
      numerics::add_row(numerics::matmul(x1, P[block.w1]), P[block.b1]), hp_.leaky_slope);
  Var f = numerics::add_row(numerics::matmul(hidden, P[block.w2]), P[block.b2]);
  f = numerics::dropout(f, hp_.dropout, g.dropout_rng);
  Var x2 = numerics::layer_norm_rows(residual(x1, f), P[block.ln2_gain], P[block.ln2_bias],
                                     numerics::kLayerNormEps);
  return numerics::mask_rows(x2, mask);
}

Var CarcaModel::encode_profile(Graph& g, Var profile_embeddings,
                               std::span<const std::uint8_t> mask) const {
  Var x = profile_embeddings;
  for (const auto& block : blocks_) x = self_attention_block(g, x, block, mask);
  return x;
}

Var CarcaModel::score_targets(Graph& g, Var target_embeddings, Var profile_features,
                              std::span<const std::uint8_t> mask) const {
  const auto P = g.params;
  if (hp_.scoring == ScoringMode::dot_product) {
    std::ptrdiff_t last = -1;
    for (std::size_t r = 0; r < mask.size(); ++r) {
      if (mask[r]) last = static_cast<std::ptrdiff_t>(r);
    }
    const std::array<std::ptrdiff_t, 1> pick{last};
    Var latest = numerics::gather_rows(profile_features, pick);
    return numerics::sigmoid(numerics::matmul_nt(target_embeddings, latest));
  }

  std::vector<Var> qs, ks, vs;
  for (std::size_t h = 0; h < cross_query_.size(); ++h) {
    qs.push_back(numerics::matmul(target_embeddings, P[cross_query_[h]]));
    ks.push_back(numerics::matmul(profile_features, P[cross_key_[h]]));
    vs.push_back(numerics::matmul(profile_features, P[cross_value_[h]]));
  }
  Var s = numerics::dropout(attention(qs, ks, vs, mask), hp_.dropout, g.dropout_rng);
  if (hp_.ca_residual) s = numerics::mul(target_embeddings, s);
  if (!output_blocks_.empty()) {
    const std::vector<std::uint8_t> all(target_embeddings.rows(), 1);
    for (const auto& block : output_blocks_) s = self_attention_block(g, s, block, all);
  }
  return numerics::sigmoid(
      numerics::add_row(numerics::matmul(s, P[score_weight_]), P[score_bias_]));
}

Var CarcaModel::forward(Graph& g, std::span<const data::ItemId> profile_items,
                        const Matrix& profile_ctx, std::span<const std::uint8_t> mask,
                        std::span<const data::ItemId> targets, const Matrix& target_ctx) const {
  if (profile_items.size() != mask.size()) throw ShapeError("profile items and mask differ in length");
  Var ep = embed_profile(g, profile_items, profile_ctx, mask);
  Var fp = encode_profile(g, ep, mask);
  Var eo = embed_items(g, targets, target_ctx);
  return score_targets(g, eo, fp, mask);
}

std::vector<double> CarcaModel::score(const ModelParams& params, const data::ItemCatalog& catalog,
                                      std::span<const data::ItemId> profile_items,
                                      const Matrix& profile_ctx, std::span<const std::uint8_t> mask,
                                      std::span<const data::ItemId> targets,
                                      const Matrix& target_ctx) const {
  Tape tape(/*recording=*/false);
  const auto vars = tape.bind(params);
  Graph g = make_graph(tape, vars, catalog, nullptr);
  const Matrix& scores = forward(g, profile_items, profile_ctx, mask, targets, target_ctx).value();
  return {scores.data().begin(), scores.data().end()};
}

}  // namespace carca::model

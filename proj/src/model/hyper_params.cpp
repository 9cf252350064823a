#include "carca/model/hyper_params.hpp"

#include <array>
#include <cmath>
#include <string>

#include "carca/error.hpp"

namespace carca::model {
namespace {

template <typename Enum, std::size_t N>
Enum parse_enum(std::string_view s, const std::array<std::pair<std::string_view, Enum>, N>& table,
                const char* what) {
  for (const auto& [name, value] : table) {
    if (name == s) return value;
  }
  std::string options;
  for (const auto& [name, value] : table) options += (options.empty() ? "" : ", ") + std::string(name);
  throw ConfigError("unknown " + std::string(what) + " '" + std::string(s) + "' (expected one of " +
                    options + ")");
}

constexpr std::array<std::pair<std::string_view, ResidualMode>, 2> kResidual{{
    {"multiplicative", ResidualMode::multiplicative}, {"additive", ResidualMode::additive}}};
constexpr std::array<std::pair<std::string_view, ScoringMode>, 2> kScoring{{
    {"cross_attention", ScoringMode::cross_attention}, {"dot_product", ScoringMode::dot_product}}};
constexpr std::array<std::pair<std::string_view, PositionalMode>, 3> kPositional{{
    {"context", PositionalMode::context},
    {"positional_encoding", PositionalMode::positional_encoding},
    {"none", PositionalMode::none}}};
constexpr std::array<std::pair<std::string_view, FeatureLayout>, 3> kLayout{{
    {"default", FeatureLayout::separate},
    {"concat_all", FeatureLayout::concat_all},
    {"concat_item", FeatureLayout::concat_item}}};
constexpr std::array<std::pair<std::string_view, TargetMode>, 2> kTarget{{
    {"list", TargetMode::list_wise}, {"single", TargetMode::single}}};

template <typename Enum, std::size_t N>
std::string_view name_of(Enum v, const std::array<std::pair<std::string_view, Enum>, N>& table) {
  for (const auto& [name, value] : table) {
    if (value == v) return name;
  }
  return "?";
}

}  // namespace

void HyperParams::validate() const {
  if (d == 0) throw ConfigError("d must be positive");
  if (g == 0) throw ConfigError("g must be positive");
  if (heads == 0) throw ConfigError("head count must be positive");
  if (d % heads != 0) {
    throw ConfigError("d=" + std::to_string(d) + " is not divisible by heads=" +
                      std::to_string(heads));
  }
  if (blocks == 0) throw ConfigError("at least one self-attention block is required");
  if (max_len < 2) throw ConfigError("max_len must be at least 2");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
  if (!(l2_weight >= 0.0) || !std::isfinite(l2_weight)) throw ConfigError("l2_weight must be >= 0");
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw ConfigError("lr must be >= 0");
  if (!(leaky_slope > 0.0 && leaky_slope < 1.0)) throw ConfigError("leaky_slope must lie in (0, 1)");
}

HyperParams preset(std::string_view dataset) {
  HyperParams hp;  // games
  if (dataset == "games") return hp;
  if (dataset == "men" || dataset == "fashion") {
    hp.lr = dataset == "men" ? 0.000006 : 0.00001;
    hp.max_len = 35;
    hp.blocks = 3;
    hp.heads = 3;
    hp.dropout = 0.3;
    hp.l2_weight = 0.0001;
    hp.d = 390;
    hp.g = 1950;
    hp.ca_residual = false;
    return hp;
  }
  if (dataset == "beauty") {
    hp.lr = 0.0001;
    hp.max_len = 75;
    hp.blocks = 3;
    hp.heads = 1;
    hp.dropout = 0.5;
    hp.l2_weight = 0.0001;
    hp.d = 90;
    hp.g = 450;
    hp.ca_residual = true;
    return hp;
  }
  throw ConfigError("unknown preset '" + std::string(dataset) +
                    "' (expected games, men, fashion or beauty)");
}

std::string_view to_string(ResidualMode m) { return name_of(m, kResidual); }
std::string_view to_string(ScoringMode m) { return name_of(m, kScoring); }
std::string_view to_string(PositionalMode m) { return name_of(m, kPositional); }
std::string_view to_string(FeatureLayout m) { return name_of(m, kLayout); }
std::string_view to_string(TargetMode m) { return name_of(m, kTarget); }

ResidualMode parse_residual_mode(std::string_view s) { return parse_enum(s, kResidual, "residual mode"); }
ScoringMode parse_scoring_mode(std::string_view s) { return parse_enum(s, kScoring, "scoring mode"); }
PositionalMode parse_positional_mode(std::string_view s) {
  return parse_enum(s, kPositional, "positional mode");
}
FeatureLayout parse_feature_layout(std::string_view s) { return parse_enum(s, kLayout, "feature layout"); }
TargetMode parse_target_mode(std::string_view s) { return parse_enum(s, kTarget, "target mode"); }

HyperParams apply_ablation(HyperParams hp, int id) {
  switch (id) {
    case 1:
      break;
    case 2:
      hp.residual = ResidualMode::additive;
      break;
    case 3:
      hp.layout = FeatureLayout::concat_all;
      break;
    case 4:
      hp.layout = FeatureLayout::concat_item;
      break;
    case 5:
      hp.positional = PositionalMode::positional_encoding;
      break;
    case 6:
      hp.output_blocks = 1;
      break;
    case 7:
      hp.target_mode = TargetMode::single;
      break;
    case 8:
      for (int part : {2, 3, 5, 7}) hp = apply_ablation(hp, part);
      break;
    default:
      throw ConfigError("ablation id must be in 1..8, got " + std::to_string(id));
  }
  return hp;
}

std::string_view ablation_name(int id) {
  switch (id) {
    case 1: return "Default";
    case 2: return "Additive residual connections";
    case 3: return "Concat. all features";
    case 4: return "Concat. item features";
    case 5: return "Positional encoding";
    case 6: return "Additional self-attention blocks on output";
    case 7: return "Single target split";
    case 8: return "Transformer architecture";
    default: throw ConfigError("ablation id must be in 1..8, got " + std::to_string(id));
  }
}

}  // namespace carca::model

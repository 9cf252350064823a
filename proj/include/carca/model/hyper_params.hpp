#pragma once

#include <cstddef>
#include <string>
#include <string_view>

namespace carca::model {

enum class ResidualMode { multiplicative, additive };
enum class ScoringMode { cross_attention, dot_product };
enum class PositionalMode { context, positional_encoding, none };
// separate:     item id -> phi, (attributes, context) -> psi, both -> omega
// concat_all:   (one-hot id, attributes, context) through a single layer
// concat_item:  (one-hot id, attributes) -> phi, context -> psi, both -> omega
enum class FeatureLayout { separate, concat_all, concat_item };
// list_wise trains against the whole shifted profile; single only against its last item.
enum class TargetMode { list_wise, single };

struct HyperParams {
  std::size_t d = 90;          // item embedding width
  std::size_t g = 450;         // attribute/context embedding width
  std::size_t heads = 3;
  std::size_t blocks = 3;
  std::size_t max_len = 50;
  double dropout = 0.5;
  double l2_weight = 0.0;
  double lr = 1e-4;
  ResidualMode residual = ResidualMode::multiplicative;
  ScoringMode scoring = ScoringMode::cross_attention;
  PositionalMode positional = PositionalMode::context;
  FeatureLayout layout = FeatureLayout::separate;
  bool ca_residual = true;
  double leaky_slope = 0.2;
  std::size_t output_blocks = 0;  // extra self-attention blocks on the scorer output
  TargetMode target_mode = TargetMode::list_wise;

  // Throws ConfigError describing the first violated constraint.
  void validate() const;

  bool operator==(const HyperParams&) const = default;
};

// Best configurations per dataset; "games" equals the defaults above.
HyperParams preset(std::string_view dataset);

std::string_view to_string(ResidualMode m);
std::string_view to_string(ScoringMode m);
std::string_view to_string(PositionalMode m);
std::string_view to_string(FeatureLayout m);
std::string_view to_string(TargetMode m);

ResidualMode parse_residual_mode(std::string_view s);
ScoringMode parse_scoring_mode(std::string_view s);
PositionalMode parse_positional_mode(std::string_view s);
FeatureLayout parse_feature_layout(std::string_view s);
TargetMode parse_target_mode(std::string_view s);

// Ablation configurations 1..8. Applying an id overrides only the fields that id
// changes; 8 is the composition of 2, 3, 5 and 7.
inline constexpr int kAblationCount = 8;
HyperParams apply_ablation(HyperParams hp, int id);
std::string_view ablation_name(int id);

}  // namespace carca::model

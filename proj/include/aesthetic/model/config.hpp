#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace aesthetic {

inline constexpr std::size_t kNumAttributes = 11;

/// Canonical attribute order. Ties in weight-sorted views fall back to it.
inline constexpr std::array<std::string_view, kNumAttributes> kAttributeNames = {
    "elements_balance", "color_harmony", "content",     "depth_of_field",
    "light",            "motion_blur",   "object",      "repetition",
    "rule_of_thirds",   "symmetry",      "color_vividness"};

enum class Attribute : std::size_t {
  elements_balance = 0,
  color_harmony,
  content,
  depth_of_field,
  light,
  motion_blur,
  object,
  repetition,
  rule_of_thirds,
  symmetry,
  color_vividness,
};

constexpr std::size_t index_of(Attribute a) { return static_cast<std::size_t>(a); }

/// Index in canonical order, or kNumAttributes when the name is unknown.
std::size_t attribute_index(std::string_view name);

struct ModelConfig {
  std::size_t image_size = 64;    // square RGB input
  std::size_t feature_size = 8;   // feature map is feature_size x feature_size
  std::vector<std::size_t> extractor_channels = {8, 16, 32, 64};
  std::size_t attention_hidden = 256;
  std::size_t attribute_hidden = 32;
  std::vector<std::size_t> hyper_hidden = {102, 19};
  double sigma = 1.0;  // score standard deviation shared by every attribute
  std::vector<std::string> attribute_names{kAttributeNames.begin(), kAttributeNames.end()};

  std::size_t num_attributes() const { return attribute_names.size(); }
  std::size_t feature_channels() const { return extractor_channels.back(); }
  std::size_t feature_cells() const { return feature_size * feature_size; }

  /// Throws std::invalid_argument describing the first violated constraint.
  void validate() const;

  /// Per-block mean-pool window; the product equals image_size / feature_size.
  std::vector<std::size_t> pool_windows() const;

  bool operator==(const ModelConfig&) const = default;
};

void to_json(nlohmann::json& j, const ModelConfig& c);
void from_json(const nlohmann::json& j, ModelConfig& c);

}  // namespace aesthetic

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "json.hpp"

namespace aesthetic {

/// Spatial attention over feature-map cells, row-major height x width,
/// nonnegative and summing to one.
struct AttentionMask {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<float> values;

  float at(std::size_t row, std::size_t col) const { return values[row * width + col]; }
  bool operator==(const AttentionMask&) const = default;
};

struct AttributeEvaluation {
  std::string name;
  std::size_t index = 0;  // canonical attribute index
  double score = 0.0;     // mean of the score distribution, in (-1,1)
  double weight = 0.0;    // mixing weight
  AttentionMask mask;
  bool operator==(const AttributeEvaluation&) const = default;
};

/// Overall score plus one entry per attribute, sorted by weight descending
/// (ties in canonical attribute order).
struct EvaluationReport {
  double overall = 0.0;
  std::vector<AttributeEvaluation> attributes;

  /// Entry for a canonical attribute index; throws std::out_of_range.
  const AttributeEvaluation& by_index(std::size_t index) const;
  bool operator==(const EvaluationReport&) const = default;
};

/// Sorts entries by weight descending with the canonical-order tie-break.
void sort_by_weight(std::vector<AttributeEvaluation>& entries);

nlohmann::json to_json(const EvaluationReport& report);

}  // namespace aesthetic

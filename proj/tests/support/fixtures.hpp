#pragma once

#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "aesthetic/image.hpp"
#include "aesthetic/model/config.hpp"
#include "aesthetic/model/report.hpp"

namespace aesthetic::fixtures {

inline AttentionMask uniform_mask(std::size_t h = 8, std::size_t w = 8) {
  return {h, w, std::vector<float>(h * w, 1.0f / static_cast<float>(h * w))};
}

// Equal mass on the first `cells` cells in row-major order.
inline AttentionMask block_mask(std::size_t cells, std::size_t h = 8, std::size_t w = 8) {
  AttentionMask m{h, w, std::vector<float>(h * w, 0.0f)};
  for (std::size_t i = 0; i < cells; ++i) m.values[i] = 1.0f / static_cast<float>(cells);
  return m;
}

// Equal mass on a rectangle of cells [r0,r1) x [c0,c1).
inline AttentionMask rect_mask(std::size_t r0, std::size_t r1, std::size_t c0, std::size_t c1, std::size_t n = 8) {
  AttentionMask m{n, n, std::vector<float>(n * n, 0.0f)};
  const float v = 1.0f / static_cast<float>((r1 - r0) * (c1 - c0));
  for (std::size_t r = r0; r < r1; ++r)
    for (std::size_t c = c0; c < c1; ++c) m.values[r * n + c] = v;
  return m;
}

inline EvaluationReport make_report(double overall, const std::vector<std::tuple<std::size_t, double, double>>& entries) {
  EvaluationReport r;
  r.overall = overall;
  std::vector<bool> seen(kNumAttributes, false);
  for (auto [index, score, weight] : entries) {
    r.attributes.push_back({std::string(kAttributeNames[index]), index, score, weight, uniform_mask()});
    seen[index] = true;
  }
  for (std::size_t i = 0; i < kNumAttributes; ++i) {
    if (!seen[i]) r.attributes.push_back({std::string(kAttributeNames[i]), i, 0.99, 0.0, uniform_mask()});
  }
  sort_by_weight(r.attributes);
  return r;
}

inline AttributeEvaluation& entry(EvaluationReport& r, Attribute a) {
  for (auto& e : r.attributes)
    if (e.index == index_of(a)) return e;
  throw std::out_of_range("missing");
}

inline Image solid(std::size_t size, float r, float g, float b) {
  Image img(size, size);
  for (std::size_t y = 0; y < size; ++y)
    for (std::size_t x = 0; x < size; ++x) {
      img.at(x, y, 0) = r;
      img.at(x, y, 1) = g;
      img.at(x, y, 2) = b;
    }
  return img;
}

}  // namespace aesthetic::fixtures

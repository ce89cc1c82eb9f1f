#include "aesthetic/model/report.hpp"

#include <algorithm>
#include <stdexcept>

namespace aesthetic {

const AttributeEvaluation& EvaluationReport::by_index(std::size_t index) const {
  for (const auto& a : attributes) {
    if (a.index == index) return a;
  }
  throw std::out_of_range("no attribute with index " + std::to_string(index));
}

void sort_by_weight(std::vector<AttributeEvaluation>& entries) {
  std::stable_sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    if (a.weight != b.weight) return a.weight > b.weight;
    return a.index < b.index;
  });
}

nlohmann::json to_json(const EvaluationReport& report) {
  nlohmann::json attrs = nlohmann::json::array();
  for (const auto& a : report.attributes) {
    attrs.push_back({{"name", a.name},
                     {"index", a.index},
                     {"score", a.score},
                     {"weight", a.weight},
                     {"mask", {{"height", a.mask.height}, {"width", a.mask.width}, {"values", a.mask.values}}}});
  }
  return {{"overall", report.overall}, {"attributes", std::move(attrs)}};
}

}  // namespace aesthetic

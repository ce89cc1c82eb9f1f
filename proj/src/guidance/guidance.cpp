#include "aesthetic/guidance/guidance.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace aesthetic::guidance {

namespace {

void check_mask(const AttentionMask& mask) {
  if (mask.height == 0 || mask.width == 0 || mask.values.size() != mask.height * mask.width) {
    throw std::invalid_argument("attention mask dimensions do not match its values");
  }
  for (float v : mask.values) {
    if (!(v >= 0.0f) || !std::isfinite(v)) throw std::invalid_argument("attention mask has a negative or non-finite value");
  }
}

// Overlap of a cell with the rectangle, as a fraction of the unit frame.
template <typename Fn>
void for_each_overlap(const AttentionMask& mask, const Rect& rect, Fn&& fn) {
  const double ch = 1.0 / static_cast<double>(mask.height);
  const double cw = 1.0 / static_cast<double>(mask.width);
  for (std::size_t r = 0; r < mask.height; ++r) {
    const double oy = std::min(rect.y1, (r + 1) * ch) - std::max(rect.y0, r * ch);
    if (oy <= 0) continue;
    for (std::size_t c = 0; c < mask.width; ++c) {
      const double ox = std::min(rect.x1, (c + 1) * cw) - std::max(rect.x0, c * cw);
      if (ox <= 0) continue;
      fn(ox * oy, static_cast<double>(mask.at(r, c)));
    }
  }
}

std::string replace_all(std::string text, const std::string& key, const std::string& value) {
  for (std::size_t pos = text.find(key); pos != std::string::npos; pos = text.find(key, pos + value.size())) {
    text.replace(pos, key.size(), value);
  }
  return text;
}

std::string join_names(const std::vector<std::string>& names) {
  std::string out;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (i > 0) out += i + 1 == names.size() ? " and " : ", ";
    out += display_name(names[i]);
  }
  return out;
}

GuidanceMessage attribute_message(const AttributeEvaluation& a, Level level, Severity severity,
                                  const TemplateCatalog& catalog) {
  GuidanceMessage m;
  m.attribute = a.name;
  m.severity = severity;
  m.template_id = template_id(a.name, level);
  m.text = catalog.text(m.template_id);
  m.mask = a.mask;
  return m;
}

// The measured rule for area and chrominance triggers; nullopt when the
// quantity is in the comfortable band or cannot be measured.
std::optional<Level> measured_level(const AttributeEvaluation& a, Trigger trigger, const Image* image,
                                    const HeuristicConfig& config) {
  if (trigger == Trigger::attended_area) return area_rule(attended_area_fraction(a.mask, config.mass_coverage), config);
  if (trigger == Trigger::chrominance && image != nullptr) return chroma_rule(mean_chrominance(*image, a.mask), config);
  return std::nullopt;
}

}  // namespace

void HeuristicConfig::validate() const {
  if (!(area_low > 0 && area_low < area_high && area_high < 1)) {
    throw std::invalid_argument("heuristics: need 0 < area_low < area_high < 1");
  }
  if (!(chroma_low >= 0 && chroma_low < chroma_high && chroma_high <= 1)) {
    throw std::invalid_argument("heuristics: need 0 <= chroma_low < chroma_high <= 1");
  }
  if (!(mass_coverage > 0 && mass_coverage < 1)) throw std::invalid_argument("heuristics: mass_coverage must lie in (0,1)");
  if (!(poll_interval > 0)) throw std::invalid_argument("heuristics: poll_interval must be positive");
}

void to_json(nlohmann::json& j, const HeuristicConfig& c) {
  j = {{"area_high", c.area_high},     {"area_low", c.area_low},       {"mass_coverage", c.mass_coverage},
       {"chroma_low", c.chroma_low},   {"chroma_high", c.chroma_high}, {"poll_interval", c.poll_interval}};
}

void from_json(const nlohmann::json& j, HeuristicConfig& c) {
  HeuristicConfig out;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& k = it.key();
    double& field = k == "area_high"       ? out.area_high
                    : k == "area_low"      ? out.area_low
                    : k == "mass_coverage" ? out.mass_coverage
                    : k == "chroma_low"    ? out.chroma_low
                    : k == "chroma_high"   ? out.chroma_high
                    : k == "poll_interval" ? out.poll_interval
                                           : throw std::invalid_argument("heuristics: unknown key '" + k + "'");
    field = it.value().get<double>();
  }
  out.validate();
  c = out;
}

std::string to_string(Severity s) { return s == Severity::prompt ? "prompt" : "suggestion"; }

nlohmann::json to_json(const GuidanceMessage& m) {
  nlohmann::json j = {{"attribute", m.attribute},
                      {"severity", to_string(m.severity)},
                      {"template_id", m.template_id},
                      {"text", m.text}};
  if (m.region) j["region"] = {{"x0", m.region->x0}, {"y0", m.region->y0}, {"x1", m.region->x1}, {"y1", m.region->y1}};
  return j;
}

double to_display_score(double s) {
  if (!(s >= -1.0 && s <= 1.0)) throw std::out_of_range("display score input must lie in [-1,1]");
  return 1.0 + 99.0 * (s + 1.0) / 2.0;
}

std::optional<std::size_t> select_prompt_attribute(const EvaluationReport& report) {
  std::optional<std::size_t> best;
  double best_weight = 0.0;
  for (const auto& a : report.attributes) {
    if (!(a.score < report.overall)) continue;
    if (!best || a.weight > best_weight || (a.weight == best_weight && a.index < *best)) {
      best = a.index;
      best_weight = a.weight;
    }
  }
  return best;
}

double attended_area_fraction(const AttentionMask& mask, double coverage) {
  check_mask(mask);
  if (!(coverage > 0 && coverage < 1)) throw std::invalid_argument("coverage must lie in (0,1)");
  std::vector<double> v(mask.values.begin(), mask.values.end());
  std::sort(v.begin(), v.end(), std::greater<>());
  const double total = std::accumulate(v.begin(), v.end(), 0.0);
  if (!(total > 0)) throw std::invalid_argument("attention mask has no mass");
  // A relative slack keeps float rounding from costing an extra cell.
  const double target = coverage * total * (1.0 - 1e-9);
  double cum = 0.0;
  std::size_t cells = 0;
  while (cells < v.size() && cum < target) cum += v[cells++];
  return static_cast<double>(cells) / static_cast<double>(v.size());
}

double mean_chrominance(const Image& image, const AttentionMask& mask) {
  check_mask(mask);
  if (image.empty()) throw std::invalid_argument("mean_chrominance: empty image");
  double weighted = 0.0, weights = 0.0;
  for (std::size_t y = 0; y < image.height; ++y) {
    const std::size_t r = std::min(mask.height - 1, y * mask.height / image.height);
    for (std::size_t x = 0; x < image.width; ++x) {
      const std::size_t c = std::min(mask.width - 1, x * mask.width / image.width);
      const double w = mask.at(r, c);
      if (w == 0.0) continue;
      weighted += w * rgb_to_hsv(image.at(x, y, 0), image.at(x, y, 1), image.at(x, y, 2)).s;
      weights += w;
    }
  }
  if (!(weights > 0)) throw std::invalid_argument("attention mask has no mass");
  return weighted / weights;
}

double mask_mass_in_rect(const AttentionMask& mask, const Rect& rect) {
  check_mask(mask);
  const double cell_area = 1.0 / static_cast<double>(mask.height * mask.width);
  double mass = 0.0;
  for_each_overlap(mask, rect, [&](double overlap, double v) { mass += overlap / cell_area * v; });
  return mass;
}

double mean_attention_in_rect(const AttentionMask& mask, const Rect& rect) {
  check_mask(mask);
  double weighted = 0.0, area = 0.0;
  for_each_overlap(mask, rect, [&](double overlap, double v) {
    weighted += overlap * v;
    area += overlap;
  });
  return area > 0 ? weighted / area : 0.0;
}

std::optional<Level> area_rule(double area, const HeuristicConfig& config) {
  if (area > config.area_high) return Level::high;
  if (area < config.area_low) return Level::low;
  return std::nullopt;
}

std::optional<Level> chroma_rule(double chroma, const HeuristicConfig& config) {
  if (chroma < config.chroma_low) return Level::low;
  if (chroma > config.chroma_high) return Level::high;
  return std::nullopt;
}

std::string template_id(std::string_view attribute, Level level) {
  return std::string(attribute) + (level == Level::low ? ".low" : ".high");
}

std::optional<GuidanceMessage> build_prompt(const EvaluationReport& report, const Image& image,
                                            const HeuristicConfig& config, const TemplateCatalog& catalog) {
  const auto selected = select_prompt_attribute(report);
  if (!selected) return std::nullopt;
  const AttributeEvaluation& a = report.by_index(*selected);
  const Trigger trigger = catalog.attribute(*selected).trigger;
  const auto level = trigger == Trigger::score ? std::optional(Level::low) : measured_level(a, trigger, &image, config);
  if (!level) return std::nullopt;
  return attribute_message(a, *level, Severity::prompt, catalog);
}

std::vector<DetailedEntry> detailed_report(const EvaluationReport& report, const Image* image,
                                           const HeuristicConfig& config, const TemplateCatalog& catalog) {
  std::vector<AttributeEvaluation> sorted = report.attributes;
  sort_by_weight(sorted);
  std::vector<DetailedEntry> out;
  for (const auto& a : sorted) {
    DetailedEntry e;
    e.attribute = a.name;
    e.index = a.index;
    e.display_score = to_display_score(std::clamp(a.score, -1.0, 1.0));
    e.weight = a.weight;
    e.heatmap = a.name;
    const Trigger trigger = catalog.attribute(a.index).trigger;
    const auto level = trigger == Trigger::score ? std::optional(a.score < report.overall ? Level::low : Level::high)
                                                 : measured_level(a, trigger, image, config);
    if (level) e.suggestion = attribute_message(a, *level, Severity::suggestion, catalog);
    out.push_back(std::move(e));
  }
  return out;
}

nlohmann::json to_json(const DetailedEntry& e) {
  nlohmann::json j = {{"attribute", e.attribute},
                      {"index", e.index},
                      {"display_score", e.display_score},
                      {"weight", e.weight},
                      {"heatmap", e.heatmap}};
  j["suggestion"] = e.suggestion ? to_json(*e.suggestion) : nlohmann::json(nullptr);
  return j;
}

void validate_region(const Rect& r) {
  const bool inside = r.x0 >= 0 && r.y0 >= 0 && r.x1 <= 1 && r.y1 <= 1;
  if (!inside || !(r.x1 > r.x0) || !(r.y1 > r.y0)) {
    throw std::invalid_argument("region must lie within [0,1]x[0,1] and have positive area");
  }
}

GuidanceMessage regional_suggestion(const EvaluationReport& report, const RegionQuery& query,
                                    const TemplateCatalog& catalog) {
  validate_region(query.rect);
  struct Hit {
    const AttributeEvaluation* a;
    double mean;
  };
  std::vector<Hit> below, above;
  for (const auto& a : report.attributes) {
    const double baseline = 1.0 / static_cast<double>(a.mask.height * a.mask.width);
    const double mean = mean_attention_in_rect(a.mask, query.rect);
    if (!(mean > baseline * (1.0 + 1e-6))) continue;
    (a.score < report.overall ? below : above).push_back({&a, mean});
  }
  // Strongest attention first so the text does not depend on report order.
  const auto order = [](const Hit& x, const Hit& y) {
    return x.mean != y.mean ? x.mean > y.mean : x.a->index < y.a->index;
  };
  std::sort(below.begin(), below.end(), order);
  std::sort(above.begin(), above.end(), order);
  const auto names = [](const std::vector<Hit>& hits) {
    std::vector<std::string> n;
    for (const auto& h : hits) n.push_back(h.a->name);
    return n;
  };

  GuidanceMessage m;
  m.severity = Severity::suggestion;
  m.region = query.rect;
  if (below.empty() && above.empty()) {
    m.template_id = "region.neutral";
    m.text = catalog.text(m.template_id);
    return m;
  }
  if (below.size() != above.size()) {
    const bool remove = below.size() > above.size();
    const auto& side = remove ? below : above;
    m.template_id = remove ? "region.remove" : "region.keep";
    m.attribute = side.front().a->name;
    m.mask = side.front().a->mask;
    m.text = replace_all(catalog.text(m.template_id), "{attributes}", join_names(names(side)));
    return m;
  }
  m.template_id = "region.mixed";
  const Hit& lead = order(below.front(), above.front()) ? below.front() : above.front();
  m.attribute = lead.a->name;
  m.mask = lead.a->mask;
  m.text = replace_all(replace_all(catalog.text(m.template_id), "{better}", join_names(names(above))), "{worse}",
                       join_names(names(below)));
  return m;
}

std::string display_name(std::string_view attribute) {
  std::string out(attribute);
  std::replace(out.begin(), out.end(), '_', ' ');
  return out;
}

}  // namespace aesthetic::guidance

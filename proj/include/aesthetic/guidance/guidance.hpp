#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "aesthetic/color.hpp"
#include "aesthetic/data/scene.hpp"
#include "aesthetic/image.hpp"
#include "aesthetic/model/report.hpp"
#include "json.hpp"

namespace aesthetic::guidance {

using aesthetic::rgb_to_hsv;

struct HeuristicConfig {
  double area_high = 1.0 / 2.0;
  double area_low = 1.0 / 9.0;
  double mass_coverage = 0.9;
  double chroma_low = 0.2;
  double chroma_high = 0.9;
  double poll_interval = 0.5;  // seconds between live-mode evaluations

  /// Throws std::invalid_argument.
  void validate() const;
  bool operator==(const HeuristicConfig&) const = default;
};

void to_json(nlohmann::json& j, const HeuristicConfig& c);
void from_json(const nlohmann::json& j, HeuristicConfig& c);

enum class Trigger { score, attended_area, chrominance };

struct AttributeTemplates {
  Trigger trigger = Trigger::score;
  std::string low_text;
  std::string high_text;
};

/// Every text the guidance layer can emit. Template ids are
/// "<attribute>.low", "<attribute>.high" and "region.<kind>".
class TemplateCatalog {
 public:
  /// The catalog shipped with the library.
  static const TemplateCatalog& builtin();
  /// Throws std::invalid_argument naming the missing or malformed entry.
  static TemplateCatalog from_json(const nlohmann::json& j);
  static TemplateCatalog load(const std::filesystem::path& path);

  const AttributeTemplates& attribute(std::size_t index) const { return attributes_.at(index); }
  /// Text for a template id; throws std::out_of_range for unknown ids.
  const std::string& text(const std::string& id) const;
  std::vector<std::string> ids() const;

 private:
  std::array<AttributeTemplates, kNumAttributes> attributes_;
  std::string region_remove_, region_keep_, region_mixed_, region_neutral_;
};

enum class Severity { prompt, suggestion };
std::string to_string(Severity s);

struct GuidanceMessage {
  std::string attribute;  // canonical name; empty for the neutral region message
  Severity severity = Severity::prompt;
  std::string template_id;
  std::string text;
  std::optional<AttentionMask> mask;
  std::optional<Rect> region;
};

nlohmann::json to_json(const GuidanceMessage& m);

/// Affine map [-1,1] -> [1,100]. Throws std::out_of_range outside [-1,1].
double to_display_score(double s);

/// Canonical index of the heaviest attribute scoring below the overall score,
/// ties to the earlier attribute; nullopt when none scores below.
std::optional<std::size_t> select_prompt_attribute(const EvaluationReport& report);

/// Fraction of cells, taken in order of decreasing attention, needed to
/// reach `coverage` of the mask's mass.
double attended_area_fraction(const AttentionMask& mask, double coverage);

/// Attention-weighted mean HSV saturation, the mask upsampled to the image
/// by nearest cell.
double mean_chrominance(const Image& image, const AttentionMask& mask);

/// Attention mass inside a rectangle in fractional image coordinates, each
/// cell contributing in proportion to its overlap.
double mask_mass_in_rect(const AttentionMask& mask, const Rect& rect);

/// Mean per-cell attention inside the rectangle (overlap weighted).
double mean_attention_in_rect(const AttentionMask& mask, const Rect& rect);

enum class Level { low, high };

/// Which of an attribute's two texts a measured quantity triggers, if any.
std::optional<Level> area_rule(double area, const HeuristicConfig& config);
std::optional<Level> chroma_rule(double chroma, const HeuristicConfig& config);

std::string template_id(std::string_view attribute, Level level);

/// The pop-up prompt for the selected attribute, if its rule fires.
std::optional<GuidanceMessage> build_prompt(const EvaluationReport& report, const Image& image,
                                            const HeuristicConfig& config = {},
                                            const TemplateCatalog& catalog = TemplateCatalog::builtin());

struct DetailedEntry {
  std::string attribute;
  std::size_t index = 0;
  double display_score = 0;
  double weight = 0;
  std::string heatmap;  // attribute name; the service turns it into a URL
  std::optional<GuidanceMessage> suggestion;
};

/// One entry per attribute, weight descending with canonical tie-break.
/// Without an image the chrominance rule cannot fire.
std::vector<DetailedEntry> detailed_report(const EvaluationReport& report, const Image* image = nullptr,
                                           const HeuristicConfig& config = {},
                                           const TemplateCatalog& catalog = TemplateCatalog::builtin());

nlohmann::json to_json(const DetailedEntry& e);

struct RegionQuery {
  std::string image_id;
  Rect rect;
};

/// Throws std::invalid_argument unless the rectangle lies in [0,1]^2 with
/// positive area.
void validate_region(const Rect& rect);

/// Suggestion for a clicked region: attributes whose mean attention there
/// beats the uniform baseline vote by score versus overall.
GuidanceMessage regional_suggestion(const EvaluationReport& report, const RegionQuery& query,
                                    const TemplateCatalog& catalog = TemplateCatalog::builtin());

/// "color_vividness" -> "color vividness".
std::string display_name(std::string_view attribute);

}  // namespace aesthetic::guidance

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "aesthetic/autodiff/rng.hpp"
#include "aesthetic/guidance/guidance.hpp"
#include "support/fixtures.hpp"

using namespace aesthetic;
using namespace aesthetic::guidance;

namespace {

using namespace aesthetic::fixtures;

constexpr std::size_t kObject = index_of(Attribute::object);
constexpr std::size_t kVivid = index_of(Attribute::color_vividness);

}  // namespace

TEST(DisplayScore, AffineEndpointsAndMonotone) {
  EXPECT_DOUBLE_EQ(to_display_score(-1), 1.0);
  EXPECT_DOUBLE_EQ(to_display_score(0), 50.5);
  EXPECT_DOUBLE_EQ(to_display_score(1), 100.0);
  double prev = 0;
  for (double s = -1; s <= 1.0; s += 0.01) {
    const double d = to_display_score(s);
    EXPECT_GT(d, prev);
    EXPECT_GE(d, 1.0);
    EXPECT_LE(d, 100.0);
    prev = d;
  }
  EXPECT_THROW(to_display_score(1.01), std::out_of_range);
  EXPECT_THROW(to_display_score(std::nan("")), std::out_of_range);
}

TEST(SelectPrompt, HandExample) {
  // A = balance (0.3, w 0.4), B = harmony (0.2, w 0.5), C = content (0.9, w 0.1), overall 0.5 -> B.
  EvaluationReport r;
  r.overall = 0.5;
  r.attributes = {{"elements_balance", 0, 0.3, 0.4, uniform_mask()},
                  {"color_harmony", 1, 0.2, 0.5, uniform_mask()},
                  {"content", 2, 0.9, 0.1, uniform_mask()}};
  EXPECT_EQ(select_prompt_attribute(r), std::optional<std::size_t>(1));
}

TEST(SelectPrompt, NoneWhenNothingBelowAndTiesToCanonicalOrder) {
  EXPECT_EQ(select_prompt_attribute(make_report(-0.5, {})), std::nullopt);
  const auto tie = make_report(0.5, {{4, 0.1, 0.3}, {2, 0.1, 0.3}, {7, 0.2, 0.1}});
  EXPECT_EQ(select_prompt_attribute(tie), std::optional<std::size_t>(2));
  // Equal to overall is not below.
  EXPECT_EQ(select_prompt_attribute(make_report(0.99, {})), std::nullopt);
}

TEST(SelectPrompt, NeverPicksAttributeAtOrAboveOverall) {
  Rng rng(5);
  for (int t = 0; t < 500; ++t) {
    EvaluationReport r;
    r.overall = rng.uniform(-1, 1);
    for (std::size_t i = 0; i < kNumAttributes; ++i) {
      r.attributes.push_back({std::string(kAttributeNames[i]), i, rng.uniform(-1, 1), rng.uniform(), uniform_mask()});
    }
    const auto pick = select_prompt_attribute(r);
    if (pick) {
      EXPECT_LT(r.by_index(*pick).score, r.overall);
      for (const auto& a : r.attributes)
        if (a.score < r.overall) {
          EXPECT_LE(a.weight, r.by_index(*pick).weight);
        }
    } else {
      for (const auto& a : r.attributes) EXPECT_GE(a.score, r.overall);
    }
  }
}

TEST(AttendedArea, HandExamples) {
  EXPECT_DOUBLE_EQ(attended_area_fraction(block_mask(1), 0.9), 1.0 / 64.0);
  EXPECT_DOUBLE_EQ(attended_area_fraction(uniform_mask(), 0.9), 58.0 / 64.0);
  EXPECT_DOUBLE_EQ(attended_area_fraction(block_mask(32), 0.9), 29.0 / 64.0);
  EXPECT_THROW(attended_area_fraction(uniform_mask(), 1.0), std::invalid_argument);
  EXPECT_THROW(attended_area_fraction(AttentionMask{2, 2, {0, 0, 0, 0}}, 0.5), std::invalid_argument);
}

TEST(AttendedArea, ScaleInvariant) {
  Rng rng(9);
  for (int t = 0; t < 200; ++t) {
    AttentionMask m{8, 8, std::vector<float>(64)};
    for (auto& v : m.values) v = static_cast<float>(rng.uniform());
    AttentionMask scaled = m;
    const float c = static_cast<float>(rng.uniform(0.1, 10));
    for (auto& v : scaled.values) v *= c;
    EXPECT_DOUBLE_EQ(attended_area_fraction(m, 0.9), attended_area_fraction(scaled, 0.9));
  }
}

TEST(Chrominance, HandExamples) {
  EXPECT_DOUBLE_EQ(mean_chrominance(solid(32, 0.4f, 0.4f, 0.4f), block_mask(5)), 0.0);
  EXPECT_DOUBLE_EQ(mean_chrominance(solid(32, 1.0f, 0.0f, 0.0f), block_mask(5)), 1.0);
  // Left half saturated, right half gray; mask puts 0.75 of its mass on the left.
  Image img = solid(32, 0.5f, 0.5f, 0.5f);
  for (std::size_t y = 0; y < 32; ++y)
    for (std::size_t x = 0; x < 16; ++x) img.at(x, y, 1) = 0.0f, img.at(x, y, 2) = 0.0f;
  AttentionMask m{8, 8, std::vector<float>(64)};
  for (std::size_t r = 0; r < 8; ++r)
    for (std::size_t c = 0; c < 8; ++c) m.values[r * 8 + c] = c < 4 ? 0.75f / 32 : 0.25f / 32;
  EXPECT_NEAR(mean_chrominance(img, m), 0.75, 1e-6);
}

TEST(Chrominance, HsvReExport) {
  const Hsv c = guidance::rgb_to_hsv(0.2, 0.4, 0.6);
  EXPECT_NEAR(c.h, 210.0, 1e-12);
  EXPECT_NEAR(c.s, (0.6 - 0.2) / 0.6, 1e-12);
  EXPECT_NEAR(c.v, 0.6, 1e-12);
}

TEST(Rules, AreaAndChromaThresholds) {
  const HeuristicConfig cfg;
  EXPECT_EQ(area_rule(0.6, cfg), Level::high);
  EXPECT_EQ(area_rule(0.05, cfg), Level::low);
  EXPECT_EQ(area_rule(0.3, cfg), std::nullopt);
  EXPECT_EQ(chroma_rule(0.0, cfg), Level::low);
  EXPECT_EQ(chroma_rule(1.0, cfg), Level::high);
  EXPECT_EQ(chroma_rule(0.5, cfg), std::nullopt);
}

TEST(BuildPrompt, VerbatimObjectTexts) {
  const Image img = solid(64, 0.5f, 0.3f, 0.2f);
  auto r = make_report(0.5, {{kObject, -0.2, 0.6}});
  entry(r, Attribute::object).mask = block_mask(40);  // 90% coverage: 36 cells = 0.5625
  auto p = build_prompt(r, img);
  ASSERT_TRUE(p);
  EXPECT_EQ(p->text, "Your object is too salient. Try to make it small.");
  EXPECT_EQ(p->template_id, "object.high");
  EXPECT_EQ(p->severity, Severity::prompt);

  entry(r, Attribute::object).mask = block_mask(3);  // 3/64 = 0.047
  p = build_prompt(r, img);
  ASSERT_TRUE(p);
  EXPECT_EQ(p->text, "Your object is not salient. Try to focus on the major object.");

  entry(r, Attribute::object).mask = block_mask(20);  // 18/64: no rule fires
  EXPECT_FALSE(build_prompt(r, img));
}

TEST(BuildPrompt, VerbatimVividnessTexts) {
  auto r = make_report(0.5, {{kVivid, -0.2, 0.6}});
  auto p = build_prompt(r, solid(32, 0.6f, 0.6f, 0.6f));
  ASSERT_TRUE(p);
  EXPECT_EQ(p->text, "Highlighted color is not vivid.");
  p = build_prompt(r, solid(32, 0.0f, 1.0f, 0.0f));
  ASSERT_TRUE(p);
  EXPECT_EQ(p->text, "Highlighted color is too vivid.");
  EXPECT_FALSE(build_prompt(r, solid(32, 0.5f, 0.25f, 0.5f)));  // saturation 0.5
}

TEST(BuildPrompt, OtherAttributesUseTheirLowTemplate) {
  const Image img = solid(16, 0.5f, 0.5f, 0.5f);
  for (std::size_t i = 0; i < kNumAttributes; ++i) {
    if (i == kObject || i == kVivid) continue;
    const auto p = build_prompt(make_report(0.5, {{i, 0.1, 0.5}}), img);
    ASSERT_TRUE(p) << i;
    EXPECT_EQ(p->template_id, std::string(kAttributeNames[i]) + ".low");
    EXPECT_EQ(p->text, TemplateCatalog::builtin().attribute(i).low_text);
  }
  EXPECT_FALSE(build_prompt(make_report(-0.9, {}), img));
}

TEST(BuildPrompt, TextAlwaysFromCatalog) {
  std::set<std::string> texts;
  for (const auto& id : TemplateCatalog::builtin().ids()) texts.insert(TemplateCatalog::builtin().text(id));
  Rng rng(2);
  for (int t = 0; t < 300; ++t) {
    EvaluationReport r;
    r.overall = rng.uniform(-1, 1);
    for (std::size_t i = 0; i < kNumAttributes; ++i) {
      AttentionMask m{8, 8, std::vector<float>(64)};
      float sum = 0;
      for (auto& v : m.values) sum += v = static_cast<float>(std::pow(rng.uniform(), 6.0));
      for (auto& v : m.values) v /= sum;
      r.attributes.push_back({std::string(kAttributeNames[i]), i, rng.uniform(-1, 1), rng.uniform(), m});
    }
    Image img(16, 16);
    for (auto& v : img.pixels) v = static_cast<float>(rng.uniform());
    const auto p = build_prompt(r, img);
    if (p) {
      EXPECT_TRUE(texts.count(p->text)) << p->text;
    }
  }
}

TEST(Catalog, BuiltinIsCompleteAndLoadsFromFile) {
  const auto& c = TemplateCatalog::builtin();
  EXPECT_EQ(c.ids().size(), 2 * kNumAttributes + 4);
  EXPECT_EQ(c.attribute(kObject).trigger, Trigger::attended_area);
  EXPECT_EQ(c.attribute(kVivid).trigger, Trigger::chrominance);
  EXPECT_THROW(c.text("object.middle"), std::out_of_range);
  EXPECT_THROW(c.text("nonsense"), std::out_of_range);

  nlohmann::json j = nlohmann::json::parse(R"({"attributes": {}, "region": {}})");
  EXPECT_THROW(TemplateCatalog::from_json(j), std::invalid_argument);

  const auto path = std::filesystem::temp_directory_path() / "aesthetic_catalog.json";
  nlohmann::json edited;
  edited["attributes"] = nlohmann::json::object();
  for (auto name : kAttributeNames) {
    edited["attributes"][std::string(name)] = {{"trigger", "score"}, {"low_text", "low"}, {"high_text", "high"}};
  }
  edited["region"] = {{"remove", "r"}, {"keep", "k"}, {"mixed", "m"}, {"neutral", "n"}};
  std::ofstream(path) << edited.dump();
  const TemplateCatalog loaded = TemplateCatalog::load(path);
  std::filesystem::remove(path);
  EXPECT_EQ(loaded.text("light.low"), "low");
  EXPECT_EQ(loaded.attribute(kObject).trigger, Trigger::score);

  edited["attributes"]["light"]["trigger"] = "phase_of_moon";
  EXPECT_THROW(TemplateCatalog::from_json(edited), std::invalid_argument);
}

TEST(DetailedReport, SortedWithSuggestions) {
  const auto uniform = make_report(0.0, {});
  auto d = detailed_report(uniform);
  ASSERT_EQ(d.size(), kNumAttributes);
  // every weight here is 0 or equal, so canonical order survives
  for (std::size_t i = 0; i < kNumAttributes; ++i) EXPECT_EQ(d[i].index, i);

  auto r = make_report(0.2, {{3, 0.1, 0.3}, {5, 0.5, 0.25}, {9, -0.4, 0.2}, {kObject, 0.0, 0.15}});
  entry(r, Attribute::object).mask = block_mask(2);
  d = detailed_report(r);
  ASSERT_EQ(d.size(), kNumAttributes);
  EXPECT_EQ(d[0].index, 3u);
  EXPECT_EQ(d[1].index, 5u);
  EXPECT_EQ(d[2].index, 9u);
  EXPECT_EQ(d[3].index, kObject);
  for (std::size_t i = 1; i < d.size(); ++i) EXPECT_GE(d[i - 1].weight, d[i].weight);
  EXPECT_EQ(d[0].suggestion->template_id, "depth_of_field.low");
  EXPECT_EQ(d[1].suggestion->template_id, "motion_blur.high");
  EXPECT_EQ(d[3].suggestion->template_id, "object.low");
  EXPECT_EQ(d[0].suggestion->severity, Severity::suggestion);
  EXPECT_DOUBLE_EQ(d[1].display_score, to_display_score(0.5));
  EXPECT_EQ(d[0].heatmap, "depth_of_field");
  // Without the image the vividness rule stays silent.
  for (const auto& e : d)
    if (e.index == kVivid) {
      EXPECT_FALSE(e.suggestion);
    }
}

TEST(Regions, MaskMassAndMean) {
  const auto m = rect_mask(0, 4, 0, 4);  // top-left quarter
  EXPECT_NEAR(mask_mass_in_rect(m, {0, 0, 0.5, 0.5}), 1.0, 1e-6);
  EXPECT_NEAR(mask_mass_in_rect(m, {0, 0, 0.25, 0.5}), 0.5, 1e-6);
  EXPECT_NEAR(mask_mass_in_rect(m, {0.5, 0.5, 1, 1}), 0.0, 1e-12);
  // Half a cell counts half its mass.
  EXPECT_NEAR(mask_mass_in_rect(m, {0, 0, 0.0625, 0.125}), 1.0 / 32.0, 1e-6);
  EXPECT_NEAR(mean_attention_in_rect(m, {0, 0, 0.5, 0.5}), 1.0 / 16.0, 1e-6);
  EXPECT_NEAR(mask_mass_in_rect(uniform_mask(), {0.1, 0.2, 0.6, 0.9}), 0.5 * 0.7, 1e-6);
}

TEST(Regions, RemoveSuggestionNamesTheAttribute) {
  auto r = make_report(0.3, {{3, -0.2, 0.4}});
  entry(r, Attribute::depth_of_field).mask = rect_mask(0, 4, 0, 4);
  const auto m = regional_suggestion(r, {"img", {0, 0, 0.5, 0.5}});
  EXPECT_EQ(m.template_id, "region.remove");
  EXPECT_EQ(m.attribute, "depth_of_field");
  EXPECT_NE(m.text.find("depth of field"), std::string::npos);
  EXPECT_EQ(m.region, (Rect{0, 0, 0.5, 0.5}));
}

TEST(Regions, NeutralKeepAndMixed) {
  auto r = make_report(0.3, {{3, -0.2, 0.4}, {1, 0.6, 0.2}, {8, 0.7, 0.1}});
  EXPECT_EQ(regional_suggestion(r, {"img", {0.5, 0.5, 1, 1}}).template_id, "region.neutral");

  entry(r, Attribute::color_harmony).mask = rect_mask(2, 8, 4, 8);  // a third of its mass lies outside
  entry(r, Attribute::rule_of_thirds).mask = rect_mask(4, 8, 6, 8);
  auto keep = regional_suggestion(r, {"img", {0.5, 0.5, 1, 1}});
  EXPECT_EQ(keep.template_id, "region.keep");
  EXPECT_EQ(keep.attribute, "rule_of_thirds");  // stronger attention there
  EXPECT_NE(keep.text.find("rule of thirds and color harmony"), std::string::npos) << keep.text;

  entry(r, Attribute::depth_of_field).mask = rect_mask(4, 8, 4, 8);
  entry(r, Attribute::rule_of_thirds).mask = uniform_mask();
  EXPECT_EQ(regional_suggestion(r, {"img", {0.5, 0.5, 1, 1}}).template_id, "region.mixed");
}

TEST(Regions, InvariantToReportOrder) {
  Rng rng(31);
  for (int t = 0; t < 100; ++t) {
    EvaluationReport r;
    r.overall = rng.uniform(-1, 1);
    for (std::size_t i = 0; i < kNumAttributes; ++i) {
      AttentionMask m{8, 8, std::vector<float>(64)};
      float sum = 0;
      for (auto& v : m.values) sum += v = static_cast<float>(rng.uniform());
      for (auto& v : m.values) v /= sum;
      r.attributes.push_back({std::string(kAttributeNames[i]), i, rng.uniform(-1, 1), rng.uniform(), m});
    }
    const double x0 = rng.uniform(0, 0.7), y0 = rng.uniform(0, 0.7);
    const RegionQuery q{"img", {x0, y0, x0 + 0.3, y0 + 0.3}};
    const auto a = regional_suggestion(r, q);
    EvaluationReport shuffled = r;
    rng.shuffle(shuffled.attributes);
    const auto b = regional_suggestion(shuffled, q);
    EXPECT_EQ(a.text, b.text);
    EXPECT_EQ(a.attribute, b.attribute);
  }
}

TEST(Regions, RejectsBadRectangles) {
  const auto r = make_report(0.0, {});
  EXPECT_THROW(regional_suggestion(r, {"img", {0.2, 0.2, 0.2, 0.5}}), std::invalid_argument);
  EXPECT_THROW(regional_suggestion(r, {"img", {-0.1, 0, 0.5, 0.5}}), std::invalid_argument);
  EXPECT_THROW(regional_suggestion(r, {"img", {0.5, 0.5, 1.2, 0.9}}), std::invalid_argument);
  EXPECT_THROW(regional_suggestion(r, {"img", {0.6, 0.5, 0.4, 0.9}}), std::invalid_argument);
}

TEST(Config, HeuristicDefaultsAndJson) {
  const HeuristicConfig c;
  EXPECT_DOUBLE_EQ(c.area_high, 0.5);
  EXPECT_DOUBLE_EQ(c.area_low, 1.0 / 9.0);
  EXPECT_DOUBLE_EQ(c.poll_interval, 0.5);
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(nlohmann::json(c).get<HeuristicConfig>(), c);
  EXPECT_THROW((nlohmann::json{{"area_low", 0.7}}.get<HeuristicConfig>()), std::invalid_argument);
  EXPECT_THROW((nlohmann::json{{"chroma_high", 1.5}}.get<HeuristicConfig>()), std::invalid_argument);
  EXPECT_THROW((nlohmann::json{{"colour", 1}}.get<HeuristicConfig>()), std::invalid_argument);
}

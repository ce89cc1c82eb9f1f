#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "aesthetic/color.hpp"
#include "aesthetic/data/dataset.hpp"
#include "aesthetic/data/scene.hpp"
#include "aesthetic/image_io.hpp"

using namespace aesthetic;

namespace {

SceneSpec plain_scene() {
  SceneSpec s;
  s.background = {200.0, 0.3, 0.6};
  return s;
}

SceneSpec single(ShapeKind kind, double cx, double cy, double area, Hsv color = {30.0, 0.8, 0.9}) {
  SceneSpec s = plain_scene();
  s.shapes.push_back({kind, cx, cy, area, color});
  return s;
}

double attr(const SceneSpec& s, Attribute a) { return oracle_scores(s).attributes[index_of(a)]; }

class TempDir : public ::testing::Test {
 protected:
  std::filesystem::path dir;
  void SetUp() override {
    dir = std::filesystem::temp_directory_path() /
          ("aesthetic_data_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
  }
  void TearDown() override { std::filesystem::remove_all(dir); }
};

}  // namespace

TEST(Color, RgbToHsvExamples) {
  const Hsv red = rgb_to_hsv(1, 0, 0);
  EXPECT_EQ(red, (Hsv{0, 1, 1}));
  EXPECT_EQ(rgb_to_hsv(0.5, 0.5, 0.5).s, 0.0);
  // max 0.6 (blue), min 0.2: s = 0.4/0.6, h = 60 * ((r - g)/delta + 4) = 60 * (-0.5 + 4) = 210
  const Hsv c = rgb_to_hsv(0.2, 0.4, 0.6);
  EXPECT_NEAR(c.h, 210.0, 1e-12);
  EXPECT_NEAR(c.s, 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(c.v, 0.6, 1e-12);
}

TEST(Color, HsvRoundTrip) {
  Rng rng(3);
  for (int i = 0; i < 500; ++i) {
    const Hsv c{rng.uniform(0, 360), rng.uniform(0.05, 1), rng.uniform(0.05, 1)};
    const Rgb rgb = hsv_to_rgb(c);
    const Hsv back = rgb_to_hsv(rgb[0], rgb[1], rgb[2]);
    EXPECT_NEAR(hue_distance(back.h, c.h), 0.0, 1e-9);
    EXPECT_NEAR(back.s, c.s, 1e-9);
    EXPECT_NEAR(back.v, c.v, 1e-9);
  }
  EXPECT_DOUBLE_EQ(hue_distance(350, 10), 20.0);
  EXPECT_DOUBLE_EQ(hue_distance(0, 180), 180.0);
}

TEST(Scene, GenerationIsDeterministicAndValid) {
  EXPECT_EQ(generate_scene(11, 4), generate_scene(11, 4));
  EXPECT_NE(generate_scene(11, 4), generate_scene(11, 5));
  for (std::uint64_t i = 0; i < 1000; ++i) EXPECT_NO_THROW(validate_scene(generate_scene(11, i))) << i;
}

TEST(Scene, GenerationCoversAreaThresholdsAndRanges) {
  std::size_t below_ninth = 0, above_half = 0;
  double min_sat = 1, max_sat = 0, min_cx = 1, max_cx = 0;
  for (std::uint64_t i = 0; i < 1000; ++i) {
    const SceneSpec s = generate_scene(2024, i);
    const double area = oracle::total_area(s);
    below_ninth += area < 1.0 / 9.0;
    above_half += area > 0.5;
    min_sat = std::min(min_sat, s.shapes[0].color.s);
    max_sat = std::max(max_sat, s.shapes[0].color.s);
    const auto c = oracle::centroid(s);
    min_cx = std::min(min_cx, c[0]);
    max_cx = std::max(max_cx, c[0]);
  }
  EXPECT_GE(below_ninth, 1u);
  EXPECT_GE(above_half, 1u);
  EXPECT_LT(min_sat, 0.05);
  EXPECT_GT(max_sat, 0.95);
  EXPECT_LT(min_cx, 0.15);
  EXPECT_GT(max_cx, 0.85);
}

TEST(Scene, EmptySceneRendersUniformBackground) {
  const Image img = render_scene(plain_scene(), 32);
  const Rgb bg = hsv_to_rgb(plain_scene().background);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) EXPECT_EQ(img.pixels[i], static_cast<float>(bg[i % 3]));
}

TEST(Scene, MirrorFlagGivesExactSymmetry) {
  for (std::uint64_t i = 0; i < 200; ++i) {
    SceneSpec s = generate_scene(9, i);
    if (!s.mirror) continue;
    const Image img = render_scene(s, 48);
    for (std::size_t y = 0; y < 48; ++y)
      for (std::size_t x = 0; x < 48; ++x)
        for (std::size_t c = 0; c < 3; ++c) ASSERT_EQ(img.at(x, y, c), img.at(47 - x, y, c));
    EXPECT_EQ(attr(s, Attribute::symmetry), 1.0);
  }
}

TEST(Scene, CirclePixelCountMatchesArea) {
  for (double a : {0.05, 0.2, 0.5}) {
    const SceneSpec s = single(ShapeKind::circle, 0.5, 0.5, a, {0, 1, 1});
    const std::size_t size = 128;
    const Image img = render_scene(s, size);
    std::size_t painted = 0;
    for (std::size_t y = 0; y < size; ++y)
      for (std::size_t x = 0; x < size; ++x) painted += img.at(x, y, 0) == 1.0f && img.at(x, y, 1) == 0.0f;
    const double expected = a * size * size;
    EXPECT_NEAR(painted, expected, 0.05 * expected) << a;
  }
}

TEST(Scene, BlurSmearsHorizontallyOnly) {
  SceneSpec s = single(ShapeKind::square, 0.5, 0.5, 0.16);
  s.blur = 0.05;
  const Image sharp = render_scene(single(ShapeKind::square, 0.5, 0.5, 0.16), 64);
  const Image blurred = render_scene(s, 64);
  EXPECT_NE(sharp, blurred);
  // Rows entirely outside the square are untouched.
  for (std::size_t x = 0; x < 64; ++x) EXPECT_EQ(sharp.at(x, 2, 0), blurred.at(x, 2, 0));
}

TEST(Scene, JsonRoundTrip) {
  const SceneSpec s = generate_scene(5, 17);
  EXPECT_EQ(nlohmann::json(s).get<SceneSpec>(), s);
}

TEST(Oracle, ObjectPeaksAtQuarterFrame) {
  EXPECT_DOUBLE_EQ(attr(single(ShapeKind::square, 0.5, 0.5, 0.25), Attribute::object), 1.0);
  EXPECT_DOUBLE_EQ(attr(single(ShapeKind::square, 0.5, 0.5, 0.0625), Attribute::object), -1.0);
  EXPECT_NEAR(attr(single(ShapeKind::square, 0.5, 0.5, 0.21875), Attribute::object), 0.5, 1e-12);
}

TEST(Oracle, VividnessFollowsSaturation) {
  EXPECT_DOUBLE_EQ(attr(single(ShapeKind::circle, 0.5, 0.5, 0.1, {10, 1.0, 0.8}), Attribute::color_vividness), 1.0);
  EXPECT_DOUBLE_EQ(attr(single(ShapeKind::circle, 0.5, 0.5, 0.1, {10, 0.5, 0.8}), Attribute::color_vividness), 0.0);
  double prev = -2;
  for (double s = 0.0; s <= 1.0; s += 0.05) {
    const double v = attr(single(ShapeKind::circle, 0.5, 0.5, 0.1, {10, s, 0.8}), Attribute::color_vividness);
    EXPECT_GT(v, prev);
    prev = v;
  }
}

TEST(Oracle, RuleOfThirdsAndBalance) {
  EXPECT_DOUBLE_EQ(attr(single(ShapeKind::circle, 1.0 / 3.0, 2.0 / 3.0, 0.05), Attribute::rule_of_thirds), 1.0);
  // Centre: distance sqrt(2)/6 to every thirds point -> normalised 0.5 -> score 0.
  EXPECT_NEAR(attr(single(ShapeKind::circle, 0.5, 0.5, 0.05), Attribute::rule_of_thirds), 0.0, 1e-12);
  EXPECT_DOUBLE_EQ(attr(single(ShapeKind::circle, 0.5, 0.3, 0.05), Attribute::elements_balance), 1.0);
  EXPECT_NEAR(attr(single(ShapeKind::circle, 0.25, 0.5, 0.05), Attribute::elements_balance), 0.0, 1e-12);
}

TEST(Oracle, LightUsesMeanLuminance) {
  SceneSpec s = plain_scene();
  s.background = {0, 0, 0.5};  // gray 0.5 -> luminance 0.5
  EXPECT_NEAR(attr(s, Attribute::light), 1.0, 1e-12);
  s.background = {0, 0, 1.0};
  EXPECT_NEAR(attr(s, Attribute::light), -1.0, 1e-12);
  // Closed form agrees with the rendered image mean.
  const SceneSpec g = generate_scene(3, 8);
  const Image img = render_scene(g, 256);
  double sum = 0;
  for (std::size_t y = 0; y < 256; ++y)
    for (std::size_t x = 0; x < 256; ++x) sum += luminance({img.at(x, y, 0), img.at(x, y, 1), img.at(x, y, 2)});
  EXPECT_NEAR(sum / (256.0 * 256.0), oracle::mean_luminance(g), 0.02);
}

TEST(Oracle, MonotoneControls) {
  // motion blur decreases with blur radius
  double prev = 2;
  for (double b = 0; b <= 0.05; b += 0.005) {
    SceneSpec s = single(ShapeKind::square, 0.5, 0.5, 0.1);
    s.blur = b;
    const double v = attr(s, Attribute::motion_blur);
    EXPECT_LT(v, prev);
    prev = v;
  }
  // repetition increases with copy count
  prev = -2;
  for (int n = 1; n <= 5; ++n) {
    SceneSpec s = plain_scene();
    s.repetition = n;
    const double v = attr(s, Attribute::repetition);
    EXPECT_GT(v, prev);
    prev = v;
  }
  // depth of field decreases with background saturation
  prev = 2;
  for (double sat = 0; sat <= 1.0; sat += 0.1) {
    SceneSpec s = single(ShapeKind::square, 0.5, 0.5, 0.1);
    s.background.s = sat;
    const double v = attr(s, Attribute::depth_of_field);
    EXPECT_LT(v, prev);
    prev = v;
  }
}

TEST(Oracle, HarmonyAndContent) {
  SceneSpec s = single(ShapeKind::square, 0.5, 0.5, 0.1, {200, 0.5, 0.5});
  s.background = {200, 0.5, 0.5};
  EXPECT_DOUBLE_EQ(attr(s, Attribute::color_harmony), 1.0);
  EXPECT_DOUBLE_EQ(attr(s, Attribute::content), -1.0);
  s.shapes[0].color.h = 290;
  EXPECT_DOUBLE_EQ(attr(s, Attribute::color_harmony), -1.0);
  s.shapes[0].color.h = 20;
  EXPECT_DOUBLE_EQ(attr(s, Attribute::color_harmony), 1.0);
}

TEST(Oracle, PureAndInRangeWithConvexOverall) {
  for (std::uint64_t i = 0; i < 300; ++i) {
    const SceneSpec s = generate_scene(77, i);
    const OracleScores a = oracle_scores(s), b = oracle_scores(s);
    EXPECT_EQ(a.overall, b.overall);
    EXPECT_EQ(a.attributes, b.attributes);
    double mix = 0;
    const auto w = oracle_mixture(s.background.h);
    for (std::size_t k = 0; k < kNumAttributes; ++k) {
      EXPECT_GE(a.attributes[k], -1.0);
      EXPECT_LE(a.attributes[k], 1.0);
      mix += w[k] * a.attributes[k];
    }
    EXPECT_NEAR(a.overall, mix, 1e-12);
  }
  for (double h : {10.0, 130.0, 250.0}) {
    double sum = 0;
    for (double w : oracle_mixture(h)) sum += w;
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }
  EXPECT_NE(oracle_mixture(10.0), oracle_mixture(130.0));
}

TEST(ImageIo, PngRoundTripAndJpegDecode) {
  const Image img = render_scene(generate_scene(1, 2), 40);
  const Image back = decode_image(encode_png(img));
  ASSERT_EQ(back.width, 40u);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) EXPECT_NEAR(back.pixels[i], img.pixels[i], 0.5 / 255.0 + 1e-6);
  const Image jpg = decode_image(encode_jpeg(img, 95));
  EXPECT_EQ(jpg.width, 40u);
  EXPECT_EQ(jpg.height, 40u);
  EXPECT_THROW(decode_image("not an image"), ImageDecodeError);
  std::string truncated = encode_png(img);
  truncated.resize(truncated.size() / 2);
  EXPECT_THROW(decode_image(truncated), ImageDecodeError);
  std::string bad_jpeg = encode_jpeg(img);
  bad_jpeg.resize(20);
  EXPECT_THROW(decode_image(bad_jpeg), ImageDecodeError);
}

TEST(ImageIo, BilinearResize) {
  Image flat(64, 64, 0.3f);
  EXPECT_EQ(resize_bilinear(flat, 32, 32), Image(32, 32, 0.3f));
  Image ramp(4, 1);
  for (std::size_t x = 0; x < 4; ++x)
    for (std::size_t c = 0; c < 3; ++c) ramp.at(x, 0, c) = static_cast<float>(x) / 3.0f;
  const Image half = resize_bilinear(ramp, 2, 1);
  // Output centres map to input x = 0.5 and 2.5.
  EXPECT_NEAR(half.at(0, 0, 0), 0.5 / 3.0, 1e-6);
  EXPECT_NEAR(half.at(1, 0, 0), 2.5 / 3.0, 1e-6);
}

TEST_F(TempDir, GeneratedManifestRoundTrips) {
  const auto manifest = generate_dataset(dir, 12, 7, 32);
  std::ifstream in(manifest);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header,
            "path,overall,elements_balance,color_harmony,content,depth_of_field,light,motion_blur,object,repetition,"
            "rule_of_thirds,symmetry,color_vividness");
  const Dataset loaded = load_manifest(manifest, 32);
  const Dataset direct = synthesize(12, 7, 32);
  ASSERT_EQ(loaded.size(), 12u);
  for (std::size_t i = 0; i < 12; ++i) {
    EXPECT_EQ(loaded[i].overall, direct[i].overall);
    EXPECT_EQ(loaded[i].attributes, direct[i].attributes);
    for (std::size_t p = 0; p < direct[i].image.pixels.size(); ++p) {
      ASSERT_NEAR(loaded[i].image.pixels[p], direct[i].image.pixels[p], 0.5 / 255.0 + 1e-6);
    }
  }
  const auto rows = read_manifest(manifest);
  write_manifest(dir / "copy.csv", rows);
  EXPECT_EQ(read_manifest(dir / "copy.csv"), rows);
  EXPECT_EQ(read_file(manifest), read_file(dir / "copy.csv"));
}

TEST_F(TempDir, GenerationIsByteIdentical) {
  generate_dataset(dir / "a", 6, 3, 32);
  generate_dataset(dir / "b", 6, 3, 32);
  EXPECT_EQ(read_file(dir / "a" / "manifest.csv"), read_file(dir / "b" / "manifest.csv"));
  EXPECT_EQ(read_file(dir / "a" / "images" / "000005.png"), read_file(dir / "b" / "images" / "000005.png"));
}

TEST_F(TempDir, LoaderResizesOnLoad) {
  const auto manifest = generate_dataset(dir, 2, 1, 64);
  const Dataset small = load_manifest(manifest, 32);
  EXPECT_EQ(small[0].image.width, 32u);
  EXPECT_EQ(small[0].image.height, 32u);
}

TEST_F(TempDir, OutOfRangeScoreNamesTheRow) {
  const auto manifest = generate_dataset(dir, 3, 1, 16);
  auto rows = read_manifest(manifest);
  std::ofstream out(dir / "bad.csv");
  out << manifest_header() << "\n";
  out << rows[0].path << ",0.1,0,0,0,0,0,0,0,0,0,0,0\n";
  out << rows[1].path << ",1.5,0,0,0,0,0,0,0,0,0,0,0\n";
  out.close();
  try {
    read_manifest(dir / "bad.csv");
    ADD_FAILURE();
  } catch (const ManifestError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("outside"), std::string::npos) << e.what();
  }
}

TEST_F(TempDir, MalformedAndMissing) {
  EXPECT_THROW(read_manifest(dir / "none.csv"), ManifestError);
  {
    std::ofstream out(dir / "hdr.csv");
    out << "path,overall\n";
  }
  EXPECT_THROW(read_manifest(dir / "hdr.csv"), ManifestError);
  {
    std::ofstream out(dir / "cols.csv");
    out << manifest_header() << "\nimg.png,0.1,0.2\n";
  }
  EXPECT_THROW(read_manifest(dir / "cols.csv"), ManifestError);
  {
    std::ofstream out(dir / "nan.csv");
    out << manifest_header() << "\nimg.png,abc,0,0,0,0,0,0,0,0,0,0,0\n";
  }
  EXPECT_THROW(read_manifest(dir / "nan.csv"), ManifestError);
  {
    std::ofstream out(dir / "missing.csv");
    out << manifest_header() << "\nnope.png,0,0,0,0,0,0,0,0,0,0,0,0\n";
  }
  EXPECT_THROW(load_manifest(dir / "missing.csv", 16), ManifestError);
}

TEST(Split, SizesDeterminismAndPartition) {
  const auto [a, b] = split_indices(100, 0.8, 4);
  EXPECT_EQ(a.size(), 80u);
  EXPECT_EQ(b.size(), 20u);
  EXPECT_EQ(split_indices(100, 0.8, 4), split_indices(100, 0.8, 4));
  EXPECT_NE(split_indices(100, 0.8, 4), split_indices(100, 0.8, 5));
  std::multiset<std::size_t> all(a.begin(), a.end());
  all.insert(b.begin(), b.end());
  std::multiset<std::size_t> expected;
  for (std::size_t i = 0; i < 100; ++i) expected.insert(i);
  EXPECT_EQ(all, expected);
  EXPECT_THROW(split_indices(100, 0.0, 1), std::invalid_argument);
  EXPECT_THROW(split_indices(100, 1.0, 1), std::invalid_argument);
  EXPECT_THROW(split_indices(3, 0.01, 1), std::invalid_argument);

  const Dataset d = synthesize(10, 1, 8);
  const auto [tr, va] = split(d, 0.7, 2);
  EXPECT_EQ(tr.size(), 7u);
  EXPECT_EQ(va.size(), 3u);
}

#include "aesthetic/data/scene.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace aesthetic {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kPitch = 1.15;  // copy spacing relative to copy width
constexpr std::size_t kCanonicalSize = 64;

double clamp1(double x) { return std::clamp(x, -1.0, 1.0); }

double side_for_area(ShapeKind kind, double area) {
  switch (kind) {
    case ShapeKind::circle: return 2.0 * std::sqrt(area / kPi);
    case ShapeKind::square: return std::sqrt(area);
    case ShapeKind::triangle: return std::sqrt(2.0 * area);
  }
  return 0.0;
}

double area_for_side(ShapeKind kind, double side) {
  switch (kind) {
    case ShapeKind::circle: return kPi * side * side / 4.0;
    case ShapeKind::square: return side * side;
    case ShapeKind::triangle: return side * side / 2.0;
  }
  return 0.0;
}

}  // namespace

std::string to_string(ShapeKind kind) {
  switch (kind) {
    case ShapeKind::circle: return "circle";
    case ShapeKind::square: return "square";
    case ShapeKind::triangle: return "triangle";
  }
  return "?";
}

ShapeKind shape_kind_from_string(const std::string& name) {
  if (name == "circle") return ShapeKind::circle;
  if (name == "square") return ShapeKind::square;
  if (name == "triangle") return ShapeKind::triangle;
  throw std::invalid_argument("unknown shape kind '" + name + "'");
}

double SceneShape::extent() const { return side_for_area(kind, area); }

Rect SceneShape::bounds() const {
  const double h = extent() / 2.0;
  return {cx - h, cy - h, cx + h, cy + h};
}

bool SceneShape::contains(double u, double v) const {
  const double side = extent();
  const double du = u - cx, dv = v - cy;
  switch (kind) {
    case ShapeKind::circle: return du * du + dv * dv <= side * side / 4.0;
    case ShapeKind::square: return std::abs(du) <= side / 2.0 && std::abs(dv) <= side / 2.0;
    case ShapeKind::triangle: {
      const double t = (dv + side / 2.0) / side;  // 0 at the apex, 1 at the base
      return t >= 0.0 && t <= 1.0 && std::abs(du) <= t * side / 2.0;
    }
  }
  return false;
}

std::array<double, 2> SceneShape::centroid() const {
  if (kind == ShapeKind::triangle) return {cx, cy + extent() / 6.0};
  return {cx, cy};
}

void to_json(nlohmann::json& j, const SceneSpec& s) {
  auto hsv = [](const Hsv& c) { return nlohmann::json::array({c.h, c.s, c.v}); };
  nlohmann::json shapes = nlohmann::json::array();
  for (const auto& sh : s.shapes) {
    shapes.push_back({{"kind", to_string(sh.kind)},
                      {"cx", sh.cx},
                      {"cy", sh.cy},
                      {"area", sh.area},
                      {"color", hsv(sh.color)}});
  }
  j = {{"background", hsv(s.background)}, {"shapes", std::move(shapes)}, {"blur", s.blur},
       {"mirror", s.mirror},               {"repetition", s.repetition},  {"seed", s.seed}};
}

void from_json(const nlohmann::json& j, SceneSpec& s) {
  auto hsv = [](const nlohmann::json& a) { return Hsv{a.at(0).get<double>(), a.at(1).get<double>(), a.at(2).get<double>()}; };
  s.background = hsv(j.at("background"));
  s.shapes.clear();
  for (const auto& sh : j.at("shapes")) {
    s.shapes.push_back({shape_kind_from_string(sh.at("kind").get<std::string>()), sh.at("cx").get<double>(),
                        sh.at("cy").get<double>(), sh.at("area").get<double>(), hsv(sh.at("color"))});
  }
  s.blur = j.at("blur").get<double>();
  s.mirror = j.at("mirror").get<bool>();
  s.repetition = j.at("repetition").get<int>();
  s.seed = j.value("seed", std::uint64_t{0});
}

void validate_scene(const SceneSpec& spec) {
  auto fail = [](const std::string& m) { throw std::invalid_argument("SceneSpec: " + m); };
  auto check_color = [&](const Hsv& c, const char* what) {
    if (!(c.h >= 0 && c.h < 360 && c.s >= 0 && c.s <= 1 && c.v >= 0 && c.v <= 1)) {
      fail(std::string(what) + " colour out of range");
    }
  };
  check_color(spec.background, "background");
  if (!(spec.blur >= 0 && spec.blur <= 1)) fail("blur must lie in [0,1]");
  if (spec.repetition < 1) fail("repetition must be at least 1");
  constexpr double tol = 1e-9;
  for (const auto& sh : spec.shapes) {
    check_color(sh.color, "shape");
    if (!(sh.area > 0 && sh.area <= 1)) fail("shape area must lie in (0,1]");
    const Rect b = sh.bounds();
    if (b.x0 < -tol || b.y0 < -tol || b.x1 > 1 + tol || b.y1 > 1 + tol) fail("shape leaves the frame");
  }
}

SceneSpec generate_scene(Rng& rng) {
  SceneSpec spec;
  spec.background = {rng.uniform(0, 360), rng.uniform(), rng.uniform(0.05, 1.0)};
  spec.mirror = rng.bernoulli(0.2);
  spec.repetition = rng.bernoulli(0.5) ? 1 : 2 + static_cast<int>(rng.below(4));
  spec.blur = rng.bernoulli(0.5) ? 0.0 : rng.uniform(0.005, 0.05);
  const auto kind = static_cast<ShapeKind>(rng.below(3));
  const Hsv color{rng.uniform(0, 360), rng.uniform(), rng.uniform(0.2, 1.0)};

  const int n = spec.repetition;
  double area;  // per copy
  if (n == 1) {
    // Mostly small and mid-sized subjects, with a tail of dominant ones.
    const bool large = !rng.bernoulli(0.88);
    if (kind == ShapeKind::triangle) area = large ? rng.uniform(0.30, 0.45) : rng.uniform(0.02, 0.16);
    else area = large ? rng.uniform(0.50, 0.75) : rng.uniform(0.02, 0.30);
  } else {
    const double max_side = 0.95 / (n * kPitch);
    area = area_for_side(kind, max_side) * rng.uniform(0.3, 1.0);
  }
  const double side = side_for_area(kind, area);
  const double pitch = kPitch * side;
  const double row = (n - 1) * pitch + side;
  const double cx = spec.mirror ? 0.5 : rng.uniform(row / 2, 1 - row / 2);
  const double cy = rng.uniform(side / 2, 1 - side / 2);
  for (int i = 0; i < n; ++i) {
    spec.shapes.push_back({kind, cx + (i - (n - 1) / 2.0) * pitch, cy, area, color});
  }
  return spec;
}

SceneSpec generate_scene(std::uint64_t seed, std::uint64_t index) {
  Rng rng = Rng::stream(seed, index);
  SceneSpec spec = generate_scene(rng);
  spec.seed = splitmix64(seed ^ splitmix64(index));
  return spec;
}

Image render_scene(const SceneSpec& spec, std::size_t size) {
  Image img(size, size);
  const Rgb bg = hsv_to_rgb(spec.background);
  std::vector<Rgb> colors;
  for (const auto& sh : spec.shapes) colors.push_back(hsv_to_rgb(sh.color));
  for (std::size_t y = 0; y < size; ++y) {
    const double v = (y + 0.5) / size;
    for (std::size_t x = 0; x < size; ++x) {
      const double u = (x + 0.5) / size;
      const Rgb* c = &bg;
      for (std::size_t k = 0; k < spec.shapes.size(); ++k) {
        if (spec.shapes[k].contains(u, v)) c = &colors[k];
      }
      for (std::size_t ch = 0; ch < 3; ++ch) img.at(x, y, ch) = static_cast<float>((*c)[ch]);
    }
  }

  const auto radius = static_cast<std::ptrdiff_t>(std::lround(spec.blur * size));
  if (radius > 0) {
    const auto w = static_cast<std::ptrdiff_t>(size);
    std::vector<double> line(size * 3);
    for (std::size_t y = 0; y < size; ++y) {
      for (std::ptrdiff_t x = 0; x < w; ++x) {
        for (std::size_t ch = 0; ch < 3; ++ch) {
          double acc = 0.0;
          for (std::ptrdiff_t d = -radius; d <= radius; ++d) {
            acc += img.at(static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(x + d, 0, w - 1)), y, ch);
          }
          line[static_cast<std::size_t>(x) * 3 + ch] = acc / static_cast<double>(2 * radius + 1);
        }
      }
      for (std::size_t i = 0; i < size * 3; ++i) img.pixels[y * size * 3 + i] = static_cast<float>(line[i]);
    }
  }

  if (spec.mirror) {
    for (std::size_t y = 0; y < size; ++y) {
      for (std::size_t x = size / 2; x < size; ++x) {
        for (std::size_t ch = 0; ch < 3; ++ch) img.at(x, y, ch) = img.at(size - 1 - x, y, ch);
      }
    }
  }
  return img;
}

namespace oracle {

double total_area(const SceneSpec& spec) {
  double a = 0.0;
  for (const auto& sh : spec.shapes) a += sh.area;
  return std::min(a, 1.0);
}

std::array<double, 2> centroid(const SceneSpec& spec) {
  double wx = 0, wy = 0, w = 0;
  for (const auto& sh : spec.shapes) {
    const auto c = sh.centroid();
    wx += sh.area * c[0];
    wy += sh.area * c[1];
    w += sh.area;
  }
  if (w <= 0) return {0.5, 0.5};
  return {wx / w, wy / w};
}

double mean_luminance(const SceneSpec& spec) {
  const double area = total_area(spec);
  double lum = (1.0 - area) * luminance(hsv_to_rgb(spec.background));
  for (const auto& sh : spec.shapes) lum += sh.area * luminance(hsv_to_rgb(sh.color));
  return lum;
}

double mirror_difference(const SceneSpec& spec) {
  const Image img = render_scene(spec, kCanonicalSize);
  const std::size_t n = kCanonicalSize;
  auto lum = [&](std::size_t x, std::size_t y) {
    return luminance({img.at(x, y, 0), img.at(x, y, 1), img.at(x, y, 2)});
  };
  double total = 0.0;
  for (std::size_t y = 0; y < n; ++y) {
    for (std::size_t x = 0; x < n; ++x) total += std::abs(lum(x, y) - lum(n - 1 - x, y));
  }
  return total / static_cast<double>(n * n);
}

}  // namespace oracle

std::array<double, kNumAttributes> oracle_mixture(double background_hue) {
  // Columns in canonical attribute order:
  // balance, harmony, content, dof, light, motion, object, repetition, thirds, symmetry, vividness
  static constexpr std::array<std::array<double, kNumAttributes>, 3> bands = {{
      {0.05, 0.01, 0.10, 0.02, 0.15, 0.03, 0.30, 0.05, 0.05, 0.04, 0.20},
      {0.03, 0.01, 0.08, 0.02, 0.30, 0.10, 0.04, 0.20, 0.02, 0.15, 0.05},
      {0.12, 0.01, 0.03, 0.20, 0.08, 0.15, 0.06, 0.04, 0.01, 0.02, 0.28},
  }};
  const double h = std::fmod(std::fmod(background_hue, 360.0) + 360.0, 360.0);
  return bands[std::min<std::size_t>(2, static_cast<std::size_t>(h / 120.0))];
}

OracleScores oracle_scores(const SceneSpec& spec) {
  using A = Attribute;
  OracleScores out;
  auto& s = out.attributes;
  const double area = oracle::total_area(spec);
  const auto [cx, cy] = oracle::centroid(spec);
  const double bg_lum = luminance(hsv_to_rgb(spec.background));
  const bool has_shape = !spec.shapes.empty();
  const Hsv shape_color = has_shape ? spec.shapes.front().color : spec.background;
  const double shape_lum = luminance(hsv_to_rgb(shape_color));

  s[index_of(A::elements_balance)] = clamp1(1.0 - 4.0 * std::abs(cx - 0.5));
  s[index_of(A::color_harmony)] = clamp1(std::abs(hue_distance(shape_color.h, spec.background.h) - 90.0) / 45.0 - 1.0);
  s[index_of(A::content)] = clamp1(4.0 * std::abs(shape_lum - bg_lum) - 1.0);
  s[index_of(A::depth_of_field)] = clamp1(1.0 - 2.0 * spec.background.s);
  s[index_of(A::light)] = clamp1(1.0 - 4.0 * std::abs(oracle::mean_luminance(spec) - 0.5));
  s[index_of(A::motion_blur)] = clamp1(1.0 - 2.0 * std::min(1.0, spec.blur / 0.05));
  s[index_of(A::object)] = clamp1(1.0 - 4.0 * std::abs(area - 0.25) / 0.25);
  s[index_of(A::repetition)] = clamp1(-1.0 + 0.5 * (spec.repetition - 1));

  double nearest = std::numeric_limits<double>::infinity();
  for (double tx : {1.0 / 3.0, 2.0 / 3.0}) {
    for (double ty : {1.0 / 3.0, 2.0 / 3.0}) nearest = std::min(nearest, std::hypot(cx - tx, cy - ty));
  }
  s[index_of(A::rule_of_thirds)] = clamp1(1.0 - 2.0 * nearest / (std::numbers::sqrt2 / 3.0));
  s[index_of(A::symmetry)] = spec.mirror ? 1.0 : clamp1(1.0 - 8.0 * oracle::mirror_difference(spec));

  double sat = 0.0;
  for (const auto& sh : spec.shapes) sat += sh.color.s;
  s[index_of(A::color_vividness)] = has_shape ? clamp1(2.0 * sat / spec.shapes.size() - 1.0) : -1.0;

  const auto w = oracle_mixture(spec.background.h);
  out.overall = 0.0;
  for (std::size_t i = 0; i < kNumAttributes; ++i) out.overall += w[i] * s[i];
  out.overall = clamp1(out.overall);
  return out;
}

}  // namespace aesthetic

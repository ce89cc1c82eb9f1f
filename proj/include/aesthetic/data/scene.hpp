#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "aesthetic/autodiff/rng.hpp"
#include "aesthetic/color.hpp"
#include "aesthetic/image.hpp"
#include "aesthetic/model/config.hpp"
#include "json.hpp"

namespace aesthetic {

enum class ShapeKind { circle, square, triangle };

std::string to_string(ShapeKind kind);
ShapeKind shape_kind_from_string(const std::string& name);

/// Axis-aligned rectangle in fractional image coordinates.
struct Rect {
  double x0 = 0, y0 = 0, x1 = 1, y1 = 1;
  double area() const { return (x1 - x0) * (y1 - y0); }
  bool operator==(const Rect&) const = default;
};

/// One filled shape. `cx, cy` is the bounding-box centre and `area` the
/// painted fraction of the frame. Triangles are isosceles, apex up, with
/// base equal to height.
struct SceneShape {
  ShapeKind kind = ShapeKind::circle;
  double cx = 0.5;
  double cy = 0.5;
  double area = 0.1;
  Hsv color;

  double extent() const;  // bounding-box side length
  Rect bounds() const;
  bool contains(double u, double v) const;
  /// Area centroid (differs from the box centre for triangles).
  std::array<double, 2> centroid() const;
  bool operator==(const SceneShape&) const = default;
};

struct SceneSpec {
  Hsv background;
  std::vector<SceneShape> shapes;  // `repetition` identical copies in a row
  double blur = 0.0;               // horizontal box-blur radius, fraction of width
  bool mirror = false;             // left half mirrored onto the right half
  int repetition = 1;
  std::uint64_t seed = 0;

  bool operator==(const SceneSpec&) const = default;
};

void to_json(nlohmann::json& j, const SceneSpec& s);
void from_json(const nlohmann::json& j, SceneSpec& s);

/// Throws std::invalid_argument if any coordinate, size or colour is out of
/// range or a shape leaves the frame.
void validate_scene(const SceneSpec& spec);

SceneSpec generate_scene(Rng& rng);
/// Scene `index` of a run seeded with `seed` (independent rng stream).
SceneSpec generate_scene(std::uint64_t seed, std::uint64_t index);

/// Square rasterisation at `size` pixels; a pixel is painted when its
/// centre lies inside a shape.
Image render_scene(const SceneSpec& spec, std::size_t size);

struct OracleScores {
  double overall = 0.0;
  std::array<double, kNumAttributes> attributes{};
};

OracleScores oracle_scores(const SceneSpec& spec);

/// Overall-mixture weights for a background hue (three hue bands).
std::array<double, kNumAttributes> oracle_mixture(double background_hue);

/// Individual oracle terms, exposed for tests and docs.
namespace oracle {
double total_area(const SceneSpec& spec);
std::array<double, 2> centroid(const SceneSpec& spec);
double mean_luminance(const SceneSpec& spec);
/// Mean |lum(x,y) - lum(W-1-x,y)| of the canonical 64-pixel render.
double mirror_difference(const SceneSpec& spec);
}  // namespace oracle

}  // namespace aesthetic

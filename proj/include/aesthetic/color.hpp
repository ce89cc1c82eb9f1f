#pragma once

#include <array>

namespace aesthetic {

/// Hue in degrees [0,360), saturation and value in [0,1].
struct Hsv {
  double h = 0.0;
  double s = 0.0;
  double v = 0.0;
  bool operator==(const Hsv&) const = default;
};

using Rgb = std::array<double, 3>;

/// Max/min formulation; gray inputs get hue 0. Inputs are clamped to [0,1].
Hsv rgb_to_hsv(double r, double g, double b);
Rgb hsv_to_rgb(const Hsv& c);

/// Rec. 601 luma.
inline double luminance(const Rgb& c) { return 0.299 * c[0] + 0.587 * c[1] + 0.114 * c[2]; }

/// Shortest angular distance between two hues, in [0,180].
double hue_distance(double h1, double h2);

}  // namespace aesthetic

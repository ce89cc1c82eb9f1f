#include "aesthetic/color.hpp"

#include <algorithm>
#include <cmath>

namespace aesthetic {

Hsv rgb_to_hsv(double r, double g, double b) {
  r = std::clamp(r, 0.0, 1.0);
  g = std::clamp(g, 0.0, 1.0);
  b = std::clamp(b, 0.0, 1.0);
  const double hi = std::max({r, g, b});
  const double lo = std::min({r, g, b});
  const double delta = hi - lo;
  Hsv out;
  out.v = hi;
  out.s = hi > 0.0 ? delta / hi : 0.0;
  if (delta > 0.0) {
    double h;
    if (hi == r) h = std::fmod((g - b) / delta, 6.0);
    else if (hi == g) h = (b - r) / delta + 2.0;
    else h = (r - g) / delta + 4.0;
    h *= 60.0;
    if (h < 0.0) h += 360.0;
    out.h = h >= 360.0 ? h - 360.0 : h;
  }
  return out;
}

Rgb hsv_to_rgb(const Hsv& c) {
  const double h = std::fmod(std::fmod(c.h, 360.0) + 360.0, 360.0) / 60.0;
  const double s = std::clamp(c.s, 0.0, 1.0);
  const double v = std::clamp(c.v, 0.0, 1.0);
  const double chroma = v * s;
  const double x = chroma * (1.0 - std::abs(std::fmod(h, 2.0) - 1.0));
  const double m = v - chroma;
  Rgb rgb;
  switch (static_cast<int>(h)) {
    case 0: rgb = {chroma, x, 0}; break;
    case 1: rgb = {x, chroma, 0}; break;
    case 2: rgb = {0, chroma, x}; break;
    case 3: rgb = {0, x, chroma}; break;
    case 4: rgb = {x, 0, chroma}; break;
    default: rgb = {chroma, 0, x}; break;
  }
  for (double& ch : rgb) ch += m;
  return rgb;
}

double hue_distance(double h1, double h2) {
  const double d = std::fmod(std::abs(h1 - h2), 360.0);
  return d > 180.0 ? 360.0 - d : d;
}

}  // namespace aesthetic

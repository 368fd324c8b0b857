#include "spicer/phantom.hpp"

#include <algorithm>
#include <cmath>

#include "spicer/rng.hpp"

namespace spicer {

namespace {

struct Ellipse {
  double value, a, b, x0, y0, phi_deg;
};

// Modified Shepp-Logan intensities (peak 1.0).
constexpr Ellipse kSheppLogan[] = {
    {1.0, 0.69, 0.92, 0.0, 0.0, 0.0},
    {-0.8, 0.6624, 0.874, 0.0, -0.0184, 0.0},
    {-0.2, 0.11, 0.31, 0.22, 0.0, -18.0},
    {-0.2, 0.16, 0.41, -0.22, 0.0, 18.0},
    {0.1, 0.21, 0.25, 0.0, 0.35, 0.0},
    {0.1, 0.046, 0.046, 0.0, 0.1, 0.0},
    {0.1, 0.046, 0.046, 0.0, -0.1, 0.0},
    {0.1, 0.046, 0.023, -0.08, -0.605, 0.0},
    {0.1, 0.023, 0.023, 0.0, -0.606, 0.0},
    {0.1, 0.023, 0.046, 0.06, -0.605, 0.0},
};

ComplexImage shepp_logan(int h, int w) {
  ComplexImage img(h, w);
  for (int r = 0; r < h; ++r) {
    // y runs top-down in row index; flip so the phantom is upright.
    const double y = 1.0 - 2.0 * (r + 0.5) / h;
    for (int c = 0; c < w; ++c) {
      const double x = 2.0 * (c + 0.5) / w - 1.0;
      double v = 0.0;
      for (const auto& e : kSheppLogan) {
        const double t = e.phi_deg * M_PI / 180.0;
        const double xr = (x - e.x0) * std::cos(t) + (y - e.y0) * std::sin(t);
        const double yr = -(x - e.x0) * std::sin(t) + (y - e.y0) * std::cos(t);
        if ((xr * xr) / (e.a * e.a) + (yr * yr) / (e.b * e.b) <= 1.0) v += e.value;
      }
      img.at(r, c) = cxd(std::clamp(v, 0.0, 1.0), 0.0);
    }
  }
  return img;
}

ComplexImage smooth_random(int h, int w, std::uint64_t seed) {
  RandomStream rng(seed);
  const double scale = std::min(h, w);
  RealImage mag(h, w);

  const int n_bumps = 6 + int(rng.uniform_int(5));
  for (int i = 0; i < n_bumps; ++i) {
    const double cy = rng.uniform(0.15, 0.85) * h;
    const double cx = rng.uniform(0.15, 0.85) * w;
    const double sy = rng.uniform(0.08, 0.25) * scale;
    const double sx = rng.uniform(0.08, 0.25) * scale;
    const double amp = rng.uniform(0.2, 1.0);
    for (int r = 0; r < h; ++r)
      for (int c = 0; c < w; ++c) {
        const double dy = (r - cy) / sy;
        const double dx = (c - cx) / sx;
        mag.at(r, c) += amp * std::exp(-0.5 * (dy * dy + dx * dx));
      }
  }
  double peak = 0.0;
  for (double v : mag.data) peak = std::max(peak, v);
  if (peak > 0.0)
    for (double& v : mag.data) v /= peak;

  // Smooth phase: a gentle linear ramp plus one broad phase bump.
  const double fy = rng.uniform(-1.5, 1.5);
  const double fx = rng.uniform(-1.5, 1.5);
  const double py = rng.uniform(0.2, 0.8) * h;
  const double px = rng.uniform(0.2, 0.8) * w;
  const double ps = rng.uniform(0.3, 0.6) * scale;
  const double pa = rng.uniform(-1.0, 1.0);

  ComplexImage img(h, w);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      const double dy = (r - py) / ps;
      const double dx = (c - px) / ps;
      const double phase = 2.0 * M_PI * (fy * r / h + fx * c / w) +
                           pa * std::exp(-0.5 * (dy * dy + dx * dx));
      img.at(r, c) = std::polar(mag.at(r, c), phase);
    }
  return img;
}

}  // namespace

ComplexImage make_phantom(int height, int width, std::uint64_t seed,
                          PhantomKind kind) {
  if (height < 8 || width < 8)
    throw ValidationError("make_phantom: grid must be at least 8x8");
  switch (kind) {
    case PhantomKind::shepp_logan:
      if (height < 32 || width < 32)
        throw ValidationError("make_phantom: shepp_logan needs at least 32x32");
      return shepp_logan(height, width);
    case PhantomKind::smooth_random:
      return smooth_random(height, width, seed);
  }
  throw ValidationError("make_phantom: unknown kind");
}

}  // namespace spicer

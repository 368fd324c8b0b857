#include "spicer/coils.hpp"

#include <cmath>

#include "spicer/rng.hpp"

namespace spicer {

CoilSensitivities make_coil_maps(int n_c, int height, int width,
                                 std::uint64_t seed) {
  if (n_c < 2 || n_c > 32)
    throw ValidationError("make_coil_maps: n_c must lie in [2, 32]");
  RandomStream rng(seed);

  const double cy = 0.5 * (height - 1);
  const double cx = 0.5 * (width - 1);
  const double ring = 0.55 * std::max(height, width);
  const double envelope = 0.6 * std::max(height, width);
  const double angle0 = rng.uniform(0.0, 2.0 * M_PI);

  MultiCoilImage maps(n_c, height, width);
  for (int k = 0; k < n_c; ++k) {
    const double ang = angle0 + 2.0 * M_PI * k / n_c;
    const double ky = cy + ring * std::sin(ang);
    const double kx = cx + ring * std::cos(ang);
    // Mild per-coil variation keeps the maps from being symmetric copies.
    const double gain = 1.0 + 0.2 * rng.uniform(-1.0, 1.0);
    const double tilt_y = 0.3 * rng.uniform(-1.0, 1.0) / height;
    const double tilt_x = 0.3 * rng.uniform(-1.0, 1.0) / width;
    const double phase0 = rng.uniform(0.0, 2.0 * M_PI);
    const double phase_y = rng.uniform(-2.0, 2.0) / height;
    const double phase_x = rng.uniform(-2.0, 2.0) / width;

    cxd* dst = maps.coil(k);
    for (int r = 0; r < height; ++r)
      for (int c = 0; c < width; ++c) {
        const double dy = (r - ky) / envelope;
        const double dx = (c - kx) / envelope;
        const double mag = gain * std::exp(-0.5 * (dy * dy + dx * dx)) *
                           (1.0 + tilt_y * (r - cy) + tilt_x * (c - cx));
        const double ph = phase0 + phase_y * (r - cy) + phase_x * (c - cx);
        dst[size_t(r) * width + c] = std::polar(mag, ph);
      }
  }

  // Gaussian envelopes are strictly positive, so RSS > 0 on the whole grid.
  BinaryMask fov(height, width, 1);
  return rss_normalize(maps, fov);
}

}  // namespace spicer

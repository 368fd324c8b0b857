#pragma once

#include <cstdint>

#include "spicer/types.hpp"

namespace spicer {

enum class PhantomKind { shepp_logan, smooth_random };

// Synthetic ground-truth images with magnitude in [0, 1].
//   shepp_logan   classic modified Shepp-Logan ellipse phantom, real-valued,
//                 deterministic (seed ignored); needs at least 32x32.
//   smooth_random seeded sum of smooth bumps with a smooth random phase,
//                 different seeds give visibly different images.
ComplexImage make_phantom(int height, int width, std::uint64_t seed,
                          PhantomKind kind);

}  // namespace spicer

#pragma once

#include <cstdint>

#include "spicer/csm.hpp"

namespace spicer {

// Simulated receive coils: n_c elements on a ring around the FOV, each a
// Gaussian envelope times a low-order complex field, RSS-normalized so that
// sum_k |S_k|^2 = 1 everywhere (fov is the full grid). Deterministic in
// (n_c, h, w, seed).
CoilSensitivities make_coil_maps(int n_c, int height, int width,
                                 std::uint64_t seed);

}  // namespace spicer

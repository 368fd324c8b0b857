#pragma once

#include "spicer/types.hpp"

namespace spicer {

// All metrics run on real-valued (magnitude) images, optionally restricted
// to a region mask. `ref` fixes the dynamic range.

// 10 log10(max(ref)^2 / mse); +inf when test == ref.
double psnr(const RealImage& test, const RealImage& ref,
            const BinaryMask* region = nullptr);

// ||test - ref||^2 / ||ref||^2.
double nmse(const RealImage& test, const RealImage& ref,
            const BinaryMask* region = nullptr);

// Mean local SSIM, 11x11 Gaussian window sigma 1.5, K1 = 0.01, K2 = 0.03,
// dynamic range max(ref) over the region.
double ssim(const RealImage& test, const RealImage& ref,
            const BinaryMask* region = nullptr);

}  // namespace spicer

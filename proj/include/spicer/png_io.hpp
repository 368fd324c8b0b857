#pragma once

#include <string>

#include "spicer/types.hpp"

namespace spicer {

// 8-bit grayscale PNG, min-max scaled. When a region is given, scaling uses
// only in-region values and out-of-region pixels render black.
void write_png_grayscale(const RealImage& img, const std::string& path,
                         const BinaryMask* region = nullptr);

// Error map |test - ref| scaled to a fixed fraction of max(ref), so maps
// from different methods share one scale.
void write_png_error_map(const RealImage& test, const RealImage& ref,
                         const std::string& path, double scale_frac = 0.1,
                         const BinaryMask* region = nullptr);

}  // namespace spicer

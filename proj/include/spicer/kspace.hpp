#pragma once

#include "spicer/mask.hpp"
#include "spicer/types.hpp"

namespace spicer {

// Per-coil complex k-space with its sampling mask. Rows not selected by the
// mask are exactly zero for every coil.
struct MultiCoilKspace {
  MultiCoilImage data;
  SamplingMask mask;
  double noise_sigma = 0.0;

  int n_coils() const { return data.n_coils; }
  int height() const { return data.height; }
  int width() const { return data.width; }

  // Verifies the zero-off-mask invariant; throws on violation.
  void validate() const;
};

// Zero all rows of `img` that the mask does not select (every coil).
void apply_mask_rows(MultiCoilImage& img, const SamplingMask& mask);
void apply_mask_rows(ComplexImage& img, const SamplingMask& mask);

}  // namespace spicer

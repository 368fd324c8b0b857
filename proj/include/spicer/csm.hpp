#pragma once

#include "spicer/kspace.hpp"
#include "spicer/types.hpp"

namespace spicer {

// Per-coil complex sensitivity maps. Wherever fov = 1 the maps satisfy
// sum_k |S_k|^2 = 1; outside fov they are zero.
struct CoilSensitivities {
  MultiCoilImage maps;
  BinaryMask fov;

  int n_coils() const { return maps.n_coils; }
  int height() const { return maps.height; }
  int width() const { return maps.width; }

  // Largest deviation of the in-fov RSS from 1.
  double rss_error() const;
};

// Zero the k-space outside the ACS rows and shrink the mask to ACS-only.
MultiCoilKspace extract_acs(const MultiCoilKspace& y);

// Per-coil inverse FFT of zero-filled (ACS) k-space: low-resolution coil
// images.
MultiCoilImage acs_zero_filled(const MultiCoilKspace& y_acs);

// Pixels where RSS(p0) >= threshold_frac * max RSS(p0), then one 3x3
// morphological closing to remove pinholes.
BinaryMask fov_support(const MultiCoilImage& p0, double threshold_frac);

// Divide every pixel inside fov by its RSS; zero outside. Throws if any
// in-fov pixel has RSS below 1e-12, naming how many pixels are affected.
CoilSensitivities rss_normalize(const MultiCoilImage& maps, const BinaryMask& fov);

// Clear fov bits where RSS(maps) sits below the 1e-12 floor. The estimators
// run this before normalizing, so pixels with no signal drop out of the fov
// instead of being divided.
void exclude_rss_floor(BinaryMask& fov, const MultiCoilImage& maps);

// Classical ratio estimator: low-res coil images from the ACS block divided
// by their RSS.
CoilSensitivities estimate_csm_classical(const MultiCoilKspace& y,
                                         double fov_threshold = 0.1);

}  // namespace spicer

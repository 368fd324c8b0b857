#pragma once

#include "spicer/cnn.hpp"
#include "spicer/csm.hpp"

namespace spicer {

// Everything the backward pass needs from one network CSM estimation.
// p0 and fov depend only on the measurement, not on the network weights.
struct CsmNetTrace {
  MultiCoilImage p0;
  BinaryMask fov;
  CnnTape tape;
  MultiCoilImage raw_maps;  // network output as complex maps, pre-normalization
  std::vector<double> rss;  // per-pixel RSS of raw_maps
};

// Network CSM estimator: ACS extraction, zero-filled low-res coil images,
// CNN refinement on stacked (re, im) channels, RSS normalization on the
// p0-derived fov. With a zero-initialized residual network this reduces
// exactly to the classical ratio estimator.
CoilSensitivities estimate_csm_network(const MultiCoilKspace& y, const CnnParams& net,
                                       double fov_threshold = 0.1,
                                       CsmNetTrace* trace = nullptr);

// Accumulates d(loss)/d(net params) given the cotangent of the normalized
// maps. Complex cotangents follow the conjugate convention: grad_z =
// dL/d(Re z) + i dL/d(Im z).
void csm_network_backward(const CnnParams& net, const CsmNetTrace& trace,
                          const MultiCoilImage& grad_csm, CnnGrads& grads);

}  // namespace spicer

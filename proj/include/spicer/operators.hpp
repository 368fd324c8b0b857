#pragma once

#include "spicer/csm.hpp"
#include "spicer/kspace.hpp"

namespace spicer {

// The CS-PMRI measurement operator: per coil, sample o fft2c o (S_k o .).
struct ForwardModel {
  CoilSensitivities csm;
  SamplingMask mask;

  ForwardModel(CoilSensitivities s, SamplingMask m)
      : csm(std::move(s)), mask(std::move(m)) {
    if (csm.height() != mask.height || csm.width() != mask.width)
      throw ValidationError("ForwardModel: CSM and mask shapes disagree");
  }
};

// coil k = S_k o x.
MultiCoilImage coil_expand(const ComplexImage& x, const CoilSensitivities& csm);

// sum_k conj(S_k) o c_k; the adjoint of coil_expand, and its left inverse
// wherever RSS = 1.
ComplexImage coil_combine(const MultiCoilImage& c, const CoilSensitivities& csm);

MultiCoilKspace forward(const ComplexImage& x, const ForwardModel& model);

ComplexImage adjoint(const MultiCoilKspace& y, const ForwardModel& model);

// Gradient of g(c) = 1/2 sum_k ||mask o fft2c(c_k) - y_k||^2:
// per coil, ifft2c(mask o (mask o fft2c(c_k) - y_k)).
MultiCoilImage dc_gradient(const MultiCoilImage& c, const MultiCoilKspace& y);

}  // namespace spicer

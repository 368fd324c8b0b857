#pragma once

#include "spicer/types.hpp"

namespace spicer {

// Centered orthonormal 2D Fourier pair. DC lives at (H/2, W/2) (floor),
// realized as ifftshift -> DFT -> fftshift with 1/sqrt(H*W) scaling in both
// directions, so fft2c is unitary and ifft2c is its exact inverse/adjoint.
ComplexImage fft2c(const ComplexImage& img);
ComplexImage ifft2c(const ComplexImage& ksp);

// Per-coil transforms of a stack.
MultiCoilImage fft2c(const MultiCoilImage& img);
MultiCoilImage ifft2c(const MultiCoilImage& img);

// sum_p a_p * conj(b_p); shapes must match.
cxd inner(const ComplexImage& a, const ComplexImage& b);
cxd inner(const MultiCoilImage& a, const MultiCoilImage& b);

double norm2(const ComplexImage& a);
double norm2(const MultiCoilImage& a);

}  // namespace spicer

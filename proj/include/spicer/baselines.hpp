#pragma once

#include <utility>

#include "spicer/operators.hpp"

namespace spicer {

// With maps: adjoint-combined zero-filled image. Without: RSS magnitude of
// the per-coil zero-filled images (imaginary part zero).
ComplexImage zero_filled_recon(const MultiCoilKspace& y,
                               const CoilSensitivities* csm = nullptr);

struct TvConfig {
  double tau = 1e-3;      // regularization weight
  int outer_iters = 60;
  double step = 1.0;      // <= 1 is safe: the normalized operator has L <= 1
  int prox_iters = 40;    // dual iterations per prox evaluation

  void validate() const;
};

struct TvResult {
  ComplexImage image;
  std::vector<double> objective_history;  // f(x) after every outer iteration
  bool step_warning = false;              // step exceeded the safe bound
};

// Anisotropic-TV regularized least squares by proximal gradient; the prox
// runs a fixed number of warm-started dual iterations.
TvResult tv_reconstruct(const MultiCoilKspace& y, const CoilSensitivities& csm,
                        const TvConfig& cfg);

// Anisotropic TV value tau * sum |D x|_1 plus data term, for reporting.
double tv_objective(const ComplexImage& x, const MultiCoilKspace& y,
                    const CoilSensitivities& csm, double tau);

// k-space interpolation: per missing-line offset, ridge-regularized linear
// kernels calibrated on the ACS block across all coils. Acquired samples
// pass through bit-identical. kernel_hw = (phase-encode source lines,
// readout taps).
MultiCoilKspace grappa(const MultiCoilKspace& y,
                       std::pair<int, int> kernel_hw = {4, 5},
                       double ridge = 1e-6);

// Relative residual ||A w - b|| / ||b|| of the GRAPPA calibration fit,
// exposed for verification.
double grappa_calibration_residual(const MultiCoilKspace& y,
                                   std::pair<int, int> kernel_hw = {4, 5},
                                   double ridge = 1e-6);

}  // namespace spicer

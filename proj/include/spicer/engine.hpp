#pragma once

#include "spicer/csm_net.hpp"
#include "spicer/operators.hpp"

namespace spicer {

enum class CsmMode : std::uint8_t { learned, classical };

// Everything trainable, plus the unroll configuration.
struct ModelParams {
  int unroll_steps = 8;
  bool shared_denoiser = false;
  std::vector<CnnParams> denoisers;  // K entries, or 1 when shared
  CnnParams csm_net;
  std::vector<double> step_sizes;   // one per step, initialized to 1
  std::vector<double> reg_weights;  // one per step, initialized to 0.1
  CsmMode csm_mode = CsmMode::learned;
  double fov_threshold = 0.1;
  // Ablation switch: treat the maps as constants inside the unroll steps so
  // gradients reach the CSM network only through the final combine.
  bool stop_in_loop_csm_grad = false;

  const CnnParams& denoiser(int k) const {
    return denoisers[shared_denoiser ? 0 : k];
  }
  CnnParams& denoiser(int k) { return denoisers[shared_denoiser ? 0 : k]; }

  void validate() const;
  size_t scalar_count() const;  // total trainable scalars
};

// Default desk-scale model: per-step two-scale U-Nets for the denoiser
// (no residual, zero-initialized head, so training starts at pure
// data-consistency descent) and a residual U-Net for the CSM estimator.
ModelParams make_default_model(int n_coils, int unroll_steps, int width,
                               std::uint64_t seed, bool shared_denoiser = false);

struct UnrollTrace {
  std::vector<MultiCoilImage> c_states;  // K+1 entries, c_states[0] = ifft2c(y)
  CoilSensitivities csm;
  CsmNetTrace csm_trace;                 // only filled in learned mode
  bool learned_csm = false;
  std::vector<ComplexImage> combined;    // denoiser inputs
  std::vector<CnnTape> denoiser_tapes;
  std::vector<ComplexImage> denoised;    // denoiser outputs
  std::vector<MultiCoilImage> dc_terms;
  std::vector<MultiCoilImage> reg_terms;  // coil-expanded denoiser outputs
  SamplingMask mask;
  int steps = 0;
};

struct ReconResult {
  ComplexImage image;
  CoilSensitivities csm;
};

// The K-step unrolled reconstruction:
//   c0 = per-coil ifft2c(y)
//   c_{k+1} = c_k - gamma_k (dc_gradient(c_k, y) + tau_k * S(R_k(S^H c_k)))
//   image = S^H c_K
ReconResult spicer_reconstruct(const MultiCoilKspace& y, const ModelParams& params,
                               UnrollTrace* trace = nullptr);

struct ModelGrads {
  std::vector<CnnGrads> denoisers;
  CnnGrads csm_net;
  std::vector<double> step_sizes;
  std::vector<double> reg_weights;

  explicit ModelGrads(const ModelParams& params);
  void add_scaled(const ModelGrads& other, double scale);
};

// Exact reverse-mode gradients of the reconstruction w.r.t. every trainable
// scalar. grad_image is the cotangent of the output image; grad_csm_extra,
// when given, is an additional cotangent on the estimated maps (used by
// losses that touch S outside the unroll). Accumulates into `grads`.
void unroll_backward(const ModelParams& params, const UnrollTrace& trace,
                     const ComplexImage& grad_image,
                     const MultiCoilImage* grad_csm_extra, ModelGrads& grads);

// Flat parameter/gradient views in checkpoint order:
// denoisers (layer-major), csm_net, step_sizes, reg_weights.
std::vector<double*> param_ptrs(ModelParams& params);
std::vector<double> grad_values(const ModelGrads& grads);

}  // namespace spicer

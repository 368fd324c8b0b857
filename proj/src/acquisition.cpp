#include "spicer/acquisition.hpp"

#include <cmath>

#include "spicer/fft.hpp"

namespace spicer {

std::atomic<std::uint64_t> TrainingPair::eval_accesses_{0};

const ComplexImage& TrainingPair::ground_truth() const {
  if (!truth_) throw ValidationError("TrainingPair: no ground truth stored");
  eval_accesses_.fetch_add(1);
  return *truth_;
}

const CoilSensitivities& TrainingPair::true_csm() const {
  if (!true_csm_) throw ValidationError("TrainingPair: no true CSM stored");
  eval_accesses_.fetch_add(1);
  return *true_csm_;
}

MultiCoilKspace simulate_kspace(const ComplexImage& x, const CoilSensitivities& csm,
                                const SamplingMask& mask, double noise_sigma,
                                RandomStream& rng) {
  if (csm.height() != x.height || csm.width() != x.width)
    throw ValidationError("simulate_kspace: CSM and image shapes disagree");
  if (mask.height != x.height || mask.width != x.width)
    throw ValidationError("simulate_kspace: mask and image shapes disagree");
  if (noise_sigma < 0.0)
    throw ValidationError("simulate_kspace: noise_sigma must be >= 0");

  const int nc = csm.n_coils();
  MultiCoilImage coil_imgs(nc, x.height, x.width);
  const size_t plane = coil_imgs.plane_size();
  for (int k = 0; k < nc; ++k) {
    const cxd* s = csm.maps.coil(k);
    cxd* dst = coil_imgs.coil(k);
    for (size_t p = 0; p < plane; ++p) dst[p] = s[p] * x.data[p];
  }

  MultiCoilKspace out;
  out.data = fft2c(coil_imgs);
  out.mask = mask;
  out.noise_sigma = noise_sigma;

  // Noise is drawn for every sample in a fixed coil-major order so the
  // stream consumption does not depend on the mask.
  if (noise_sigma > 0.0) {
    for (auto& v : out.data.data) v += noise_sigma * rng.complex_gaussian();
  }
  apply_mask_rows(out.data, out.mask);
  check_finite(out.data, "simulate_kspace");
  return out;
}

double default_noise_sigma(const ComplexImage& x) {
  const auto k = fft2c(x);
  double peak = 0.0;
  for (const auto& v : k.data) peak = std::max(peak, std::abs(v));
  return 0.01 * peak;
}

TrainingPair make_training_pair(const ComplexImage& x, const CoilSensitivities& csm,
                                double accel_r, int acs_count, double noise_sigma,
                                std::uint64_t seed) {
  RandomStream rng(seed);
  const int r = int(std::lround(accel_r));
  const int offset = int(rng.uniform_int(std::uint64_t(r)));
  const int offset2 = (offset + r / 2) % r;

  const auto mask1 = make_mask(x.height, x.width, accel_r, acs_count,
                               MaskKind::equispaced, seed, offset);
  const auto mask2 = make_mask(x.height, x.width, accel_r, acs_count,
                               MaskKind::equispaced, seed, offset2);

  const double sigma = noise_sigma > 0.0 ? noise_sigma : default_noise_sigma(x);

  TrainingPair pair;
  pair.y = simulate_kspace(x, csm, mask1, sigma, rng);
  pair.y_prime = simulate_kspace(x, csm, mask2, sigma, rng);
  pair.set_ground_truth(x);
  pair.set_true_csm(csm);
  return pair;
}

}  // namespace spicer

#pragma once

#include <atomic>
#include <cstdint>
#include <optional>

#include "spicer/coils.hpp"
#include "spicer/kspace.hpp"
#include "spicer/phantom.hpp"

namespace spicer {

// Noisy undersampled acquisition: per coil, mask o fft2c(S_k o x) plus
// masked complex Gaussian noise with E|e|^2 = noise_sigma^2 per sample.
MultiCoilKspace simulate_kspace(const ComplexImage& x, const CoilSensitivities& csm,
                                const SamplingMask& mask, double noise_sigma,
                                RandomStream& rng);

// Two undersampled views of the same object. The reference image and true
// maps ride along for evaluation; training must never touch them, which the
// counting accessors make checkable.
class TrainingPair {
 public:
  MultiCoilKspace y;
  MultiCoilKspace y_prime;

  TrainingPair() = default;

  void set_ground_truth(ComplexImage truth) { truth_ = std::move(truth); }
  void set_true_csm(CoilSensitivities csm) { true_csm_ = std::move(csm); }
  bool has_ground_truth() const { return truth_.has_value(); }
  bool has_true_csm() const { return true_csm_.has_value(); }

  // Every call counts as an evaluation access.
  const ComplexImage& ground_truth() const;
  const CoilSensitivities& true_csm() const;

  static std::uint64_t eval_access_count() { return eval_accesses_.load(); }
  static void reset_eval_access_count() { eval_accesses_.store(0); }

 private:
  std::optional<ComplexImage> truth_;
  std::optional<CoilSensitivities> true_csm_;
  static std::atomic<std::uint64_t> eval_accesses_;
};

// Paired acquisition: two equispaced masks with offsets (o, o + floor(R/2)
// mod R) sharing the centered ACS block, independent noise draws. Everything
// derives deterministically from `seed`.
TrainingPair make_training_pair(const ComplexImage& x, const CoilSensitivities& csm,
                                double accel_r, int acs_count, double noise_sigma,
                                std::uint64_t seed);

// noise_sigma <= 0 selects the default 0.01 * max |fft2c(x)|.
double default_noise_sigma(const ComplexImage& x);

}  // namespace spicer

#pragma once

#include "spicer/acquisition.hpp"
#include "spicer/engine.hpp"

namespace spicer {

// Cross-prediction data term: reconstruct x from y and x' from y', then
// score ||A' x - y'|| + ||A x' - y|| where each forward operator carries the
// mask and estimated maps of its own measurement. Unsquared norms by
// default; `squared` selects the squared-l2 reading.
double loss_rec(const TrainingPair& pair, const ModelParams& params,
                bool squared = false);

// Squared l2 of forward finite differences of every coil map, summed over
// neighbor pairs that lie entirely inside the fov.
double loss_smooth(const CoilSensitivities& csm);

// loss_rec + lambda * (loss_smooth(S) + loss_smooth(S')).
double total_loss(const TrainingPair& pair, const ModelParams& params,
                  double lambda_smooth, bool squared = false);

// Same value, plus exact gradients accumulated into `grads`.
double total_loss_with_grad(const TrainingPair& pair, const ModelParams& params,
                            double lambda_smooth, bool squared, ModelGrads& grads);

}  // namespace spicer

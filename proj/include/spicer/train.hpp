#pragma once

#include <limits>
#include <string>

#include "spicer/loss.hpp"

namespace spicer {

struct TrainConfig {
  int epochs = 60;
  int batch_size = 4;
  // lr for epoch e is the first entry whose threshold exceeds e.
  std::vector<std::pair<int, double>> lr_schedule = {
      {30, 1e-3}, {std::numeric_limits<int>::max(), 1e-4}};
  double lambda_smooth = 0.01;
  int unroll_steps = 8;
  int net_width = 16;
  bool shared_denoiser = false;
  bool squared_rec_norm = false;
  CsmMode csm_mode = CsmMode::learned;
  std::uint64_t seed = 0;
  std::string precision = "f64";  // recorded; compute runs in f64

  double lr_for_epoch(int epoch) const;
  void validate() const;
};

struct Checkpoint {
  ModelParams params;
  AdamState adam;
  TrainConfig config;
  int epoch = 0;
  std::vector<double> loss_history;  // per-epoch mean training loss
};

// Seeded minibatch Adam on the self-supervised loss. Only y and y' of each
// pair are read; the held-out reference fields stay untouched. Resuming
// continues epoch numbering and optimizer state from `resume_from`.
Checkpoint train(const std::vector<TrainingPair>& dataset, const TrainConfig& config,
                 const Checkpoint* resume_from = nullptr,
                 bool verbose = false);

// ".spck" container: magic "SPCK", u32 version, u64 JSON header length,
// JSON header (architecture, unroll depth, lambda, epoch, loss history,
// optimizer constants), little-endian f64 payload (parameters in
// declaration order: denoisers layer by layer with weights before bias,
// CSM network, step sizes, reg weights, then Adam moments), CRC64 trailer.
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace spicer

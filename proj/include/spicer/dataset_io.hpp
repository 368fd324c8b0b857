#pragma once

#include <string>
#include <vector>

#include "spicer/acquisition.hpp"

namespace spicer {

// ".spcr" container: magic "SPCR", u32 version, u64 JSON header length, the
// JSON header, raw little-endian interleaved (re, im) arrays in the order
// the header declares, and a trailing CRC64 of the payload. dtype "c128"
// stores f64 pairs and round-trips bit-exactly; "c64" stores f32 pairs.
struct DatasetMeta {
  std::string dtype = "c128";
  std::uint64_t seed = 0;
  double noise_sigma = 0.0;
};

void save_dataset(const std::vector<TrainingPair>& pairs, const std::string& path,
                  const DatasetMeta& meta = {});

std::vector<TrainingPair> load_dataset(const std::string& path,
                                       DatasetMeta* meta_out = nullptr);

}  // namespace spicer

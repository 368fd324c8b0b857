#pragma once

#include <cstdint>
#include <vector>

#include "spicer/rng.hpp"
#include "spicer/types.hpp"

namespace spicer {

enum class MaskKind { equispaced, random };

// Phase-encode line selector. Rows are phase encodes; the readout (width)
// direction is always fully sampled. ACS is a contiguous block centered on
// floor(H/2).
struct SamplingMask {
  int height = 0;
  int width = 0;
  std::vector<int> selected_lines;  // sorted, unique
  std::vector<int> acs_lines;       // sorted, contiguous, subset of selected

  double sampling_rate() const {
    return double(selected_lines.size()) / double(height);
  }
  bool is_selected(int row) const;
  bool is_acs(int row) const;
  bool full() const { return int(selected_lines.size()) == height; }

  // 0/1 per row, handy for mask arithmetic.
  std::vector<std::uint8_t> row_flags() const;

  void validate() const;
};

// Centered contiguous ACS row block of `count` lines around floor(h/2).
std::vector<int> centered_acs_lines(int h, int count);

// Equispaced: every round(R)-th row starting at `offset`, union the ACS
// block. Random: the ACS block plus uniformly drawn extra rows so the total
// line budget matches the equispaced mask for the same (R, acs).
SamplingMask make_mask(int height, int width, double accel_r, int acs_count,
                       MaskKind kind, std::uint64_t seed, int offset = 0);

}  // namespace spicer

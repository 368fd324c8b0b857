#include "spicer/mask.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace spicer {

bool SamplingMask::is_selected(int row) const {
  return std::binary_search(selected_lines.begin(), selected_lines.end(), row);
}

bool SamplingMask::is_acs(int row) const {
  return std::binary_search(acs_lines.begin(), acs_lines.end(), row);
}

std::vector<std::uint8_t> SamplingMask::row_flags() const {
  std::vector<std::uint8_t> flags(height, 0);
  for (int r : selected_lines) flags[r] = 1;
  return flags;
}

void SamplingMask::validate() const {
  if (height < 8 || width < 8) throw ValidationError("SamplingMask: grid too small");
  if (selected_lines.empty()) throw ValidationError("SamplingMask: no lines selected");
  for (int r : selected_lines)
    if (r < 0 || r >= height) throw ValidationError("SamplingMask: line out of range");
  if (!std::is_sorted(selected_lines.begin(), selected_lines.end()))
    throw ValidationError("SamplingMask: lines not sorted");
  for (int r : acs_lines)
    if (!is_selected(r)) throw ValidationError("SamplingMask: ACS line not selected");
  for (size_t i = 1; i < acs_lines.size(); ++i)
    if (acs_lines[i] != acs_lines[i - 1] + 1)
      throw ValidationError("SamplingMask: ACS block not contiguous");
}

std::vector<int> centered_acs_lines(int h, int count) {
  std::vector<int> lines;
  lines.reserve(count);
  const int start = h / 2 - count / 2;
  for (int i = 0; i < count; ++i) lines.push_back(start + i);
  return lines;
}

SamplingMask make_mask(int height, int width, double accel_r, int acs_count,
                       MaskKind kind, std::uint64_t seed, int offset) {
  if (accel_r < 1.0) throw ValidationError("make_mask: acceleration must be >= 1");
  if (acs_count < 0 || acs_count > height)
    throw ValidationError("make_mask: acs_count " + std::to_string(acs_count) +
                          " exceeds height " + std::to_string(height));
  const int r = int(std::lround(accel_r));
  if (offset < 0 || offset >= r)
    throw ValidationError("make_mask: offset must lie in [0, round(R))");

  std::set<int> lines;
  const auto acs = centered_acs_lines(height, acs_count);
  lines.insert(acs.begin(), acs.end());

  if (kind == MaskKind::equispaced) {
    for (int row = offset; row < height; row += r) lines.insert(row);
  } else {
    // Match the equispaced line budget for the same (R, acs, offset).
    std::set<int> equis(acs.begin(), acs.end());
    for (int row = offset; row < height; row += r) equis.insert(row);
    const size_t budget = equis.size();
    RandomStream rng(seed);
    std::vector<int> pool;
    for (int row = 0; row < height; ++row)
      if (!lines.count(row)) pool.push_back(row);
    while (lines.size() < budget && !pool.empty()) {
      const size_t pick = size_t(rng.uniform_int(pool.size()));
      lines.insert(pool[pick]);
      pool.erase(pool.begin() + pick);
    }
  }

  SamplingMask mask;
  mask.height = height;
  mask.width = width;
  mask.selected_lines.assign(lines.begin(), lines.end());
  mask.acs_lines = acs;
  mask.validate();
  return mask;
}

}  // namespace spicer

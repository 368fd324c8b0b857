#include "spicer/kspace.hpp"

namespace spicer {

void MultiCoilKspace::validate() const {
  mask.validate();
  if (mask.height != data.height || mask.width != data.width)
    throw ValidationError("MultiCoilKspace: mask and data shapes disagree");
  const auto flags = mask.row_flags();
  for (int k = 0; k < data.n_coils; ++k)
    for (int r = 0; r < data.height; ++r) {
      if (flags[r]) continue;
      const cxd* row = data.coil(k) + size_t(r) * data.width;
      for (int c = 0; c < data.width; ++c)
        if (row[c] != cxd(0.0, 0.0))
          throw ValidationError("MultiCoilKspace: nonzero sample on unselected row " +
                                std::to_string(r));
    }
}

void apply_mask_rows(MultiCoilImage& img, const SamplingMask& mask) {
  const auto flags = mask.row_flags();
  for (int k = 0; k < img.n_coils; ++k)
    for (int r = 0; r < img.height; ++r) {
      if (flags[r]) continue;
      cxd* row = img.coil(k) + size_t(r) * img.width;
      std::fill(row, row + img.width, cxd(0.0, 0.0));
    }
}

void apply_mask_rows(ComplexImage& img, const SamplingMask& mask) {
  const auto flags = mask.row_flags();
  for (int r = 0; r < img.height; ++r) {
    if (flags[r]) continue;
    cxd* row = img.data.data() + size_t(r) * img.width;
    std::fill(row, row + img.width, cxd(0.0, 0.0));
  }
}

}  // namespace spicer

#include "spicer/csm.hpp"

#include <algorithm>
#include <cmath>

#include "spicer/fft.hpp"

namespace spicer {

double CoilSensitivities::rss_error() const {
  double worst = 0.0;
  const size_t plane = maps.plane_size();
  for (size_t p = 0; p < plane; ++p) {
    if (!fov.data[p]) continue;
    double rss2 = 0.0;
    for (int k = 0; k < maps.n_coils; ++k) rss2 += std::norm(maps.data[k * plane + p]);
    worst = std::max(worst, std::abs(std::sqrt(rss2) - 1.0));
  }
  return worst;
}

MultiCoilKspace extract_acs(const MultiCoilKspace& y) {
  if (y.mask.acs_lines.empty())
    throw ValidationError("extract_acs: mask has no ACS lines");
  MultiCoilKspace out;
  out.data = y.data;
  out.noise_sigma = y.noise_sigma;
  out.mask = y.mask;
  out.mask.selected_lines = y.mask.acs_lines;
  apply_mask_rows(out.data, out.mask);
  return out;
}

MultiCoilImage acs_zero_filled(const MultiCoilKspace& y_acs) {
  return ifft2c(y_acs.data);
}

namespace {

std::vector<double> rss_map(const MultiCoilImage& p0) {
  const size_t plane = p0.plane_size();
  std::vector<double> rss(plane, 0.0);
  for (int k = 0; k < p0.n_coils; ++k) {
    const cxd* coil = p0.coil(k);
    for (size_t p = 0; p < plane; ++p) rss[p] += std::norm(coil[p]);
  }
  for (double& v : rss) v = std::sqrt(v);
  return rss;
}

BinaryMask dilate3(const BinaryMask& m) {
  BinaryMask out(m.height, m.width);
  for (int r = 0; r < m.height; ++r)
    for (int c = 0; c < m.width; ++c) {
      std::uint8_t v = 0;
      for (int dr = -1; dr <= 1 && !v; ++dr)
        for (int dc = -1; dc <= 1 && !v; ++dc) {
          const int rr = r + dr, cc = c + dc;
          if (rr >= 0 && rr < m.height && cc >= 0 && cc < m.width && m.at(rr, cc))
            v = 1;
        }
      out.at(r, c) = v;
    }
  return out;
}

// Out-of-bounds counts as set so closing never eats the frame border.
BinaryMask erode3(const BinaryMask& m) {
  BinaryMask out(m.height, m.width);
  for (int r = 0; r < m.height; ++r)
    for (int c = 0; c < m.width; ++c) {
      std::uint8_t v = 1;
      for (int dr = -1; dr <= 1 && v; ++dr)
        for (int dc = -1; dc <= 1 && v; ++dc) {
          const int rr = r + dr, cc = c + dc;
          if (rr >= 0 && rr < m.height && cc >= 0 && cc < m.width && !m.at(rr, cc))
            v = 0;
        }
      out.at(r, c) = v;
    }
  return out;
}

}  // namespace

BinaryMask fov_support(const MultiCoilImage& p0, double threshold_frac) {
  if (threshold_frac <= 0.0 || threshold_frac >= 1.0)
    throw ValidationError("fov_support: threshold_frac must lie in (0, 1)");
  const auto rss = rss_map(p0);
  double peak = 0.0;
  for (double v : rss) peak = std::max(peak, v);
  BinaryMask mask(p0.height, p0.width);
  const double cut = threshold_frac * peak;
  for (size_t p = 0; p < rss.size(); ++p) mask.data[p] = rss[p] >= cut ? 1 : 0;
  return erode3(dilate3(mask));
}

CoilSensitivities rss_normalize(const MultiCoilImage& maps, const BinaryMask& fov) {
  if (fov.height != maps.height || fov.width != maps.width)
    throw ValidationError("rss_normalize: fov shape mismatch");
  constexpr double kRssFloor = 1e-12;
  const size_t plane = maps.plane_size();
  const auto rss = rss_map(maps);

  size_t underflow = 0;
  for (size_t p = 0; p < plane; ++p)
    if (fov.data[p] && rss[p] < kRssFloor) ++underflow;
  if (underflow > 0)
    throw NumericError("rss_normalize: RSS underflow at " + std::to_string(underflow) +
                       " in-fov pixel(s)");

  CoilSensitivities out;
  out.maps = MultiCoilImage(maps.n_coils, maps.height, maps.width);
  out.fov = fov;
  for (int k = 0; k < maps.n_coils; ++k) {
    const cxd* src = maps.coil(k);
    cxd* dst = out.maps.coil(k);
    for (size_t p = 0; p < plane; ++p)
      dst[p] = fov.data[p] ? src[p] / rss[p] : cxd(0.0, 0.0);
  }
  return out;
}

void exclude_rss_floor(BinaryMask& fov, const MultiCoilImage& maps) {
  constexpr double kRssFloor = 1e-12;
  const auto rss = rss_map(maps);
  for (size_t p = 0; p < rss.size(); ++p)
    if (fov.data[p] && rss[p] < kRssFloor) fov.data[p] = 0;
}

CoilSensitivities estimate_csm_classical(const MultiCoilKspace& y,
                                         double fov_threshold) {
  const auto acs = extract_acs(y);
  if (norm2(acs.data) == 0.0)
    throw ValidationError("estimate_csm_classical: ACS region is all zero");
  const auto p0 = acs_zero_filled(acs);
  auto fov = fov_support(p0, fov_threshold);
  exclude_rss_floor(fov, p0);
  return rss_normalize(p0, fov);
}

}  // namespace spicer

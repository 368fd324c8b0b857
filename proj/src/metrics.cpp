#include "spicer/metrics.hpp"

#include <array>
#include <cmath>
#include <limits>

namespace spicer {

namespace {

void require_shapes(const RealImage& test, const RealImage& ref,
                    const BinaryMask* region) {
  if (!test.same_shape(ref)) throw ValidationError("metrics: shape mismatch");
  if (region && (region->height != ref.height || region->width != ref.width))
    throw ValidationError("metrics: region shape mismatch");
}

bool in_region(const BinaryMask* region, size_t p) {
  return !region || region->data[p] != 0;
}

double peak_over_region(const RealImage& ref, const BinaryMask* region) {
  double peak = 0.0;
  for (size_t p = 0; p < ref.data.size(); ++p)
    if (in_region(region, p)) peak = std::max(peak, ref.data[p]);
  return peak;
}

struct MseStats {
  double mse = 0.0;
  double ref_energy = 0.0;
  size_t count = 0;
};

MseStats mse_over_region(const RealImage& test, const RealImage& ref,
                         const BinaryMask* region) {
  MseStats s;
  double err = 0.0;
  for (size_t p = 0; p < ref.data.size(); ++p) {
    if (!in_region(region, p)) continue;
    const double d = test.data[p] - ref.data[p];
    err += d * d;
    s.ref_energy += ref.data[p] * ref.data[p];
    ++s.count;
  }
  if (s.count == 0) throw ValidationError("metrics: empty region");
  s.mse = err / double(s.count);
  return s;
}

// 11x11 Gaussian taps, sigma 1.5, normalized to sum 1.
std::array<double, 11> gaussian_taps() {
  std::array<double, 11> taps{};
  double sum = 0.0;
  for (int i = 0; i < 11; ++i) {
    const double d = i - 5;
    taps[i] = std::exp(-d * d / (2.0 * 1.5 * 1.5));
    sum += taps[i];
  }
  for (auto& t : taps) t /= sum;
  return taps;
}

// Separable windowed mean with truncated-window renormalization at the
// borders.
RealImage gaussian_filter(const RealImage& img) {
  static const auto taps = gaussian_taps();
  const int h = img.height, w = img.width;
  RealImage tmp(h, w), weight_x(h, w);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      double acc = 0.0, wsum = 0.0;
      for (int i = -5; i <= 5; ++i) {
        const int cc = c + i;
        if (cc < 0 || cc >= w) continue;
        acc += taps[i + 5] * img.at(r, cc);
        wsum += taps[i + 5];
      }
      tmp.at(r, c) = acc;
      weight_x.at(r, c) = wsum;
    }
  RealImage out(h, w);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      double acc = 0.0, wsum = 0.0;
      for (int i = -5; i <= 5; ++i) {
        const int rr = r + i;
        if (rr < 0 || rr >= h) continue;
        acc += taps[i + 5] * tmp.at(rr, c);
        wsum += taps[i + 5] * weight_x.at(rr, c);
      }
      out.at(r, c) = acc / wsum;
    }
  return out;
}

}  // namespace

double psnr(const RealImage& test, const RealImage& ref, const BinaryMask* region) {
  require_shapes(test, ref, region);
  const double peak = peak_over_region(ref, region);
  if (peak == 0.0) throw ValidationError("psnr: reference is all zero over region");
  const auto s = mse_over_region(test, ref, region);
  if (s.mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / s.mse);
}

double nmse(const RealImage& test, const RealImage& ref, const BinaryMask* region) {
  require_shapes(test, ref, region);
  const auto s = mse_over_region(test, ref, region);
  if (s.ref_energy == 0.0)
    throw ValidationError("nmse: reference is all zero over region");
  return s.mse * double(s.count) / s.ref_energy;
}

double ssim(const RealImage& test, const RealImage& ref, const BinaryMask* region) {
  require_shapes(test, ref, region);
  const double peak = peak_over_region(ref, region);
  const double c1 = (0.01 * peak) * (0.01 * peak);
  const double c2 = (0.03 * peak) * (0.03 * peak);

  const int h = ref.height, w = ref.width;
  RealImage tt(h, w), rr(h, w), tr(h, w);
  for (size_t p = 0; p < ref.data.size(); ++p) {
    tt.data[p] = test.data[p] * test.data[p];
    rr.data[p] = ref.data[p] * ref.data[p];
    tr.data[p] = test.data[p] * ref.data[p];
  }
  const auto mu_t = gaussian_filter(test);
  const auto mu_r = gaussian_filter(ref);
  const auto m_tt = gaussian_filter(tt);
  const auto m_rr = gaussian_filter(rr);
  const auto m_tr = gaussian_filter(tr);

  double acc = 0.0;
  size_t count = 0;
  for (size_t p = 0; p < ref.data.size(); ++p) {
    if (!in_region(region, p)) continue;
    const double ut = mu_t.data[p], ur = mu_r.data[p];
    const double var_t = m_tt.data[p] - ut * ut;
    const double var_r = m_rr.data[p] - ur * ur;
    const double cov = m_tr.data[p] - ut * ur;
    const double val = ((2.0 * ut * ur + c1) * (2.0 * cov + c2)) /
                       ((ut * ut + ur * ur + c1) * (var_t + var_r + c2));
    acc += val;
    ++count;
  }
  if (count == 0) throw ValidationError("ssim: empty region");
  return acc / double(count);
}

}  // namespace spicer

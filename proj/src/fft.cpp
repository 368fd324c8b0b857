#include "spicer/fft.hpp"

#include <fftw3.h>

#include <cmath>
#include <cstring>
#include <map>
#include <mutex>

namespace spicer {

namespace {

// One cached in-place plan pair per grid size. Plans are created with
// FFTW_ESTIMATE on fftw_malloc'ed scratch, which keeps plan selection (and
// therefore the computed values) a deterministic function of the grid size.
class PlanCache {
 public:
  struct Entry {
    fftw_plan fwd = nullptr;
    fftw_plan bwd = nullptr;
    fftw_complex* buf = nullptr;
    size_t n = 0;
  };

  Entry& get(int h, int w) {
    std::lock_guard<std::mutex> lock(mu_);
    auto key = std::make_pair(h, w);
    auto it = entries_.find(key);
    if (it != entries_.end()) return it->second;
    Entry e;
    e.n = size_t(h) * w;
    e.buf = fftw_alloc_complex(e.n);
    e.fwd = fftw_plan_dft_2d(h, w, e.buf, e.buf, FFTW_FORWARD, FFTW_ESTIMATE);
    e.bwd = fftw_plan_dft_2d(h, w, e.buf, e.buf, FFTW_BACKWARD, FFTW_ESTIMATE);
    return entries_.emplace(key, e).first->second;
  }

  std::mutex& mutex() { return mu_; }

 private:
  std::mutex mu_;
  std::map<std::pair<int, int>, Entry> entries_;
};

PlanCache& cache() {
  static PlanCache c;
  return c;
}

// Scatter src into dst with a circular shift of (dr, dc).
void circshift(const cxd* src, cxd* dst, int h, int w, int dr, int dc) {
  for (int r = 0; r < h; ++r) {
    int rr = r + dr;
    if (rr >= h) rr -= h;
    cxd* drow = dst + size_t(rr) * w;
    const cxd* srow = src + size_t(r) * w;
    for (int c = 0; c < w; ++c) {
      int cc = c + dc;
      if (cc >= w) cc -= w;
      drow[cc] = srow[c];
    }
  }
}

void transform(const cxd* in, cxd* out, int h, int w, bool forward) {
  auto& e = cache().get(h, w);
  // The scratch buffer is shared; serialize its use. One FFT at a time is
  // fine at the sizes this project runs.
  std::lock_guard<std::mutex> lock(cache().mutex());
  const size_t n = e.n;
  // ifftshift: move (floor(h/2), floor(w/2)) to (0, 0).
  std::vector<cxd> tmp(n);
  circshift(in, tmp.data(), h, w, (h + 1) / 2, (w + 1) / 2);
  std::memcpy(e.buf, tmp.data(), n * sizeof(cxd));
  fftw_execute(forward ? e.fwd : e.bwd);
  // fftshift: move (0,0) to (floor(h/2), floor(w/2)); then unitary scale.
  std::memcpy(tmp.data(), e.buf, n * sizeof(cxd));
  circshift(tmp.data(), out, h, w, h / 2, w / 2);
  const double scale = 1.0 / std::sqrt(double(n));
  for (size_t i = 0; i < n; ++i) out[i] *= scale;
}

}  // namespace

ComplexImage fft2c(const ComplexImage& img) {
  ComplexImage out(img.height, img.width);
  transform(img.data.data(), out.data.data(), img.height, img.width, true);
  return out;
}

ComplexImage ifft2c(const ComplexImage& ksp) {
  ComplexImage out(ksp.height, ksp.width);
  transform(ksp.data.data(), out.data.data(), ksp.height, ksp.width, false);
  return out;
}

MultiCoilImage fft2c(const MultiCoilImage& img) {
  MultiCoilImage out(img.n_coils, img.height, img.width);
  for (int k = 0; k < img.n_coils; ++k)
    transform(img.coil(k), out.coil(k), img.height, img.width, true);
  return out;
}

MultiCoilImage ifft2c(const MultiCoilImage& img) {
  MultiCoilImage out(img.n_coils, img.height, img.width);
  for (int k = 0; k < img.n_coils; ++k)
    transform(img.coil(k), out.coil(k), img.height, img.width, false);
  return out;
}

cxd inner(const ComplexImage& a, const ComplexImage& b) {
  if (!a.same_shape(b)) throw ValidationError("inner: shape mismatch");
  cxd acc(0.0, 0.0);
  for (size_t i = 0; i < a.data.size(); ++i) acc += a.data[i] * std::conj(b.data[i]);
  return acc;
}

cxd inner(const MultiCoilImage& a, const MultiCoilImage& b) {
  if (!a.same_shape(b)) throw ValidationError("inner: shape mismatch");
  cxd acc(0.0, 0.0);
  for (size_t i = 0; i < a.data.size(); ++i) acc += a.data[i] * std::conj(b.data[i]);
  return acc;
}

double norm2(const ComplexImage& a) {
  double acc = 0.0;
  for (const auto& v : a.data) acc += std::norm(v);
  return std::sqrt(acc);
}

double norm2(const MultiCoilImage& a) {
  double acc = 0.0;
  for (const auto& v : a.data) acc += std::norm(v);
  return std::sqrt(acc);
}

}  // namespace spicer

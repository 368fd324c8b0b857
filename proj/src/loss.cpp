#include "spicer/loss.hpp"

#include <cmath>

#include "spicer/fft.hpp"

namespace spicer {

namespace {

// Residual of predicting measurement `target` from image `x` through
// (csm, target mask).
MultiCoilImage cross_residual(const ComplexImage& x, const CoilSensitivities& csm,
                              const MultiCoilKspace& target) {
  ForwardModel model(csm, target.mask);
  auto pred = forward(x, model);
  MultiCoilImage r = pred.data;
  for (size_t p = 0; p < r.data.size(); ++p) r.data[p] -= target.data.data[p];
  apply_mask_rows(r, target.mask);
  return r;
}

double term_value(const MultiCoilImage& r, bool squared) {
  const double n = norm2(r);
  return squared ? n * n : n;
}

// Cotangent of the term w.r.t. the residual.
MultiCoilImage term_grad(const MultiCoilImage& r, bool squared) {
  MultiCoilImage g = r;
  if (squared) {
    for (auto& v : g.data) v *= 2.0;
  } else {
    const double n = norm2(r);
    const double scale = n > 0.0 ? 1.0 / n : 0.0;
    for (auto& v : g.data) v *= scale;
  }
  return g;
}

struct SmoothGrad {
  double value = 0.0;
  MultiCoilImage grad;
};

SmoothGrad smooth_with_grad(const CoilSensitivities& csm, bool want_grad) {
  const int h = csm.height(), w = csm.width(), nc = csm.n_coils();
  SmoothGrad out;
  if (want_grad) out.grad = MultiCoilImage(nc, h, w);
  for (int k = 0; k < nc; ++k) {
    const cxd* s = csm.maps.coil(k);
    cxd* g = want_grad ? out.grad.coil(k) : nullptr;
    for (int r = 0; r < h; ++r)
      for (int c = 0; c < w; ++c) {
        const size_t p = size_t(r) * w + c;
        if (!csm.fov.data[p]) continue;
        if (c + 1 < w && csm.fov.data[p + 1]) {
          const cxd d = s[p + 1] - s[p];
          out.value += std::norm(d);
          if (g) {
            g[p + 1] += 2.0 * d;
            g[p] -= 2.0 * d;
          }
        }
        if (r + 1 < h && csm.fov.data[p + w]) {
          const cxd d = s[p + w] - s[p];
          out.value += std::norm(d);
          if (g) {
            g[p + w] += 2.0 * d;
            g[p] -= 2.0 * d;
          }
        }
      }
  }
  return out;
}

}  // namespace

double loss_smooth(const CoilSensitivities& csm) {
  return smooth_with_grad(csm, false).value;
}

double loss_rec(const TrainingPair& pair, const ModelParams& params, bool squared) {
  const auto rec = spicer_reconstruct(pair.y, params);
  const auto rec_p = spicer_reconstruct(pair.y_prime, params);
  const auto r1 = cross_residual(rec.image, rec_p.csm, pair.y_prime);
  const auto r2 = cross_residual(rec_p.image, rec.csm, pair.y);
  return term_value(r1, squared) + term_value(r2, squared);
}

double total_loss(const TrainingPair& pair, const ModelParams& params,
                  double lambda_smooth, bool squared) {
  const auto rec = spicer_reconstruct(pair.y, params);
  const auto rec_p = spicer_reconstruct(pair.y_prime, params);
  const auto r1 = cross_residual(rec.image, rec_p.csm, pair.y_prime);
  const auto r2 = cross_residual(rec_p.image, rec.csm, pair.y);
  double loss = term_value(r1, squared) + term_value(r2, squared);
  if (lambda_smooth != 0.0)
    loss += lambda_smooth * (loss_smooth(rec.csm) + loss_smooth(rec_p.csm));
  return loss;
}

double total_loss_with_grad(const TrainingPair& pair, const ModelParams& params,
                            double lambda_smooth, bool squared, ModelGrads& grads) {
  UnrollTrace trace, trace_p;
  const auto rec = spicer_reconstruct(pair.y, params, &trace);
  const auto rec_p = spicer_reconstruct(pair.y_prime, params, &trace_p);
  const auto& csm = rec.csm;
  const auto& csm_p = rec_p.csm;
  const int nc = csm.n_coils(), h = csm.height(), w = csm.width();
  const size_t plane = size_t(h) * w;

  const auto r1 = cross_residual(rec.image, csm_p, pair.y_prime);
  const auto r2 = cross_residual(rec_p.image, csm, pair.y);
  double loss = term_value(r1, squared) + term_value(r2, squared);

  const auto g1 = term_grad(r1, squared);  // cotangent of A' x - y'
  const auto g2 = term_grad(r2, squared);  // cotangent of A x' - y

  // Pull each residual cotangent back through mask o fft2c; the result t_k
  // feeds both the image path (conj(S_k) t_k) and the maps path
  // (conj(image) t_k).
  MultiCoilImage t1 = g1;
  apply_mask_rows(t1, pair.y_prime.mask);
  t1 = ifft2c(t1);
  MultiCoilImage t2 = g2;
  apply_mask_rows(t2, pair.y.mask);
  t2 = ifft2c(t2);

  ComplexImage grad_x(h, w), grad_xp(h, w);
  MultiCoilImage grad_csm(nc, h, w), grad_csm_p(nc, h, w);
  for (int k = 0; k < nc; ++k) {
    const cxd* sp = csm_p.maps.coil(k);
    const cxd* s = csm.maps.coil(k);
    const cxd* t1k = t1.coil(k);
    const cxd* t2k = t2.coil(k);
    cxd* gsp = grad_csm_p.coil(k);
    cxd* gs = grad_csm.coil(k);
    for (size_t p = 0; p < plane; ++p) {
      grad_x.data[p] += std::conj(sp[p]) * t1k[p];
      gsp[p] += std::conj(rec.image.data[p]) * t1k[p];
      grad_xp.data[p] += std::conj(s[p]) * t2k[p];
      gs[p] += std::conj(rec_p.image.data[p]) * t2k[p];
    }
  }

  if (lambda_smooth != 0.0) {
    auto sm = smooth_with_grad(csm, true);
    auto sm_p = smooth_with_grad(csm_p, true);
    loss += lambda_smooth * (sm.value + sm_p.value);
    for (size_t p = 0; p < grad_csm.data.size(); ++p) {
      grad_csm.data[p] += lambda_smooth * sm.grad.data[p];
      grad_csm_p.data[p] += lambda_smooth * sm_p.grad.data[p];
    }
  }

  unroll_backward(params, trace, grad_x, &grad_csm, grads);
  unroll_backward(params, trace_p, grad_xp, &grad_csm_p, grads);
  return loss;
}

}  // namespace spicer

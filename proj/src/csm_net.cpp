#include "spicer/csm_net.hpp"

#include <cmath>

namespace spicer {

CoilSensitivities estimate_csm_network(const MultiCoilKspace& y, const CnnParams& net,
                                       double fov_threshold, CsmNetTrace* trace) {
  const auto acs = extract_acs(y);
  auto p0 = acs_zero_filled(acs);
  auto fov = fov_support(p0, fov_threshold);

  if (net.in_channels != 2 * p0.n_coils || net.out_channels != 2 * p0.n_coils)
    throw ValidationError("estimate_csm_network: network must map 2*n_c channels "
                          "to 2*n_c channels");

  CnnTape local_tape;
  CnnTape* tape = trace ? &trace->tape : &local_tape;
  const Tensor out = cnn_forward(net, complex_to_channels(p0), tape);
  auto raw_maps = channels_to_multicoil(out);

  exclude_rss_floor(fov, raw_maps);
  auto csm = rss_normalize(raw_maps, fov);
  if (trace) {
    trace->p0 = std::move(p0);
    trace->fov = std::move(fov);
    trace->raw_maps = std::move(raw_maps);
    const size_t plane = trace->raw_maps.plane_size();
    trace->rss.assign(plane, 0.0);
    for (int k = 0; k < trace->raw_maps.n_coils; ++k) {
      const cxd* coil = trace->raw_maps.coil(k);
      for (size_t p = 0; p < plane; ++p) trace->rss[p] += std::norm(coil[p]);
    }
    for (auto& v : trace->rss) v = std::sqrt(v);
  }
  return csm;
}

void csm_network_backward(const CnnParams& net, const CsmNetTrace& trace,
                          const MultiCoilImage& grad_csm, CnnGrads& grads) {
  const int nc = trace.raw_maps.n_coils;
  const size_t plane = trace.raw_maps.plane_size();
  if (grad_csm.n_coils != nc || grad_csm.height != trace.raw_maps.height ||
      grad_csm.width != trace.raw_maps.width)
    throw ValidationError("csm_network_backward: cotangent shape mismatch");

  // S_k = m_k / r with r the per-pixel RSS. With the conjugate convention,
  //   grad_m_k = gS_k / r - (Re<gS, m> / r^3) m_k
  // inside the fov, zero outside (the normalization zeroes those pixels).
  MultiCoilImage grad_maps(nc, trace.raw_maps.height, trace.raw_maps.width);
  for (size_t p = 0; p < plane; ++p) {
    if (!trace.fov.data[p]) continue;
    const double r = trace.rss[p];
    double proj = 0.0;  // Re sum_k conj(gS_k) m_k
    for (int k = 0; k < nc; ++k) {
      const cxd gs = grad_csm.data[k * plane + p];
      const cxd m = trace.raw_maps.data[k * plane + p];
      proj += gs.real() * m.real() + gs.imag() * m.imag();
    }
    const double scale = proj / (r * r * r);
    for (int k = 0; k < nc; ++k) {
      const cxd gs = grad_csm.data[k * plane + p];
      const cxd m = trace.raw_maps.data[k * plane + p];
      grad_maps.data[k * plane + p] = gs / r - scale * m;
    }
  }

  cnn_backward(net, trace.tape, complex_to_channels(grad_maps), grads);
}

}  // namespace spicer

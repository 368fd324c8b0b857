#include "spicer/operators.hpp"

#include "spicer/fft.hpp"

namespace spicer {

MultiCoilImage coil_expand(const ComplexImage& x, const CoilSensitivities& csm) {
  if (csm.height() != x.height || csm.width() != x.width)
    throw ValidationError("coil_expand: shape mismatch");
  const int nc = csm.n_coils();
  MultiCoilImage out(nc, x.height, x.width);
  const size_t plane = out.plane_size();
  for (int k = 0; k < nc; ++k) {
    const cxd* s = csm.maps.coil(k);
    cxd* dst = out.coil(k);
    for (size_t p = 0; p < plane; ++p) dst[p] = s[p] * x.data[p];
  }
  return out;
}

ComplexImage coil_combine(const MultiCoilImage& c, const CoilSensitivities& csm) {
  if (csm.n_coils() != c.n_coils || csm.height() != c.height || csm.width() != c.width)
    throw ValidationError("coil_combine: shape mismatch");
  ComplexImage out(c.height, c.width);
  const size_t plane = c.plane_size();
  for (int k = 0; k < c.n_coils; ++k) {
    const cxd* s = csm.maps.coil(k);
    const cxd* src = c.coil(k);
    for (size_t p = 0; p < plane; ++p) out.data[p] += std::conj(s[p]) * src[p];
  }
  return out;
}

MultiCoilKspace forward(const ComplexImage& x, const ForwardModel& model) {
  MultiCoilKspace out;
  out.data = fft2c(coil_expand(x, model.csm));
  out.mask = model.mask;
  apply_mask_rows(out.data, out.mask);
  return out;
}

ComplexImage adjoint(const MultiCoilKspace& y, const ForwardModel& model) {
  if (model.csm.n_coils() != y.n_coils() || model.mask.height != y.height() ||
      model.mask.width != y.width())
    throw ValidationError("adjoint: shape mismatch");
  MultiCoilImage masked = y.data;
  apply_mask_rows(masked, model.mask);
  return coil_combine(ifft2c(masked), model.csm);
}

MultiCoilImage dc_gradient(const MultiCoilImage& c, const MultiCoilKspace& y) {
  if (!c.same_shape(y.data)) throw ValidationError("dc_gradient: shape mismatch");
  MultiCoilImage residual = fft2c(c);
  apply_mask_rows(residual, y.mask);
  for (size_t i = 0; i < residual.data.size(); ++i) residual.data[i] -= y.data.data[i];
  apply_mask_rows(residual, y.mask);  // y carries zeros off-mask already; keep exact
  return ifft2c(residual);
}

}  // namespace spicer

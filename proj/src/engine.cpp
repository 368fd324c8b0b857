#include "spicer/engine.hpp"

#include <cmath>

#include "spicer/fft.hpp"

namespace spicer {

void ModelParams::validate() const {
  if (unroll_steps < 1 || unroll_steps > 16)
    throw ValidationError("ModelParams: unroll_steps must lie in [1, 16]");
  const size_t need = shared_denoiser ? 1 : size_t(unroll_steps);
  if (denoisers.size() != need)
    throw ValidationError("ModelParams: denoiser count does not match unroll_steps");
  if (step_sizes.size() != size_t(unroll_steps) ||
      reg_weights.size() != size_t(unroll_steps))
    throw ValidationError("ModelParams: step size / reg weight count mismatch");
  for (double v : step_sizes)
    if (!std::isfinite(v)) throw ValidationError("ModelParams: non-finite step size");
  for (double v : reg_weights)
    if (!std::isfinite(v)) throw ValidationError("ModelParams: non-finite reg weight");
}

size_t ModelParams::scalar_count() const {
  size_t n = 0;
  for (const auto& d : denoisers) n += d.param_count();
  n += csm_net.param_count();
  n += step_sizes.size() + reg_weights.size();
  return n;
}

ModelParams make_default_model(int n_coils, int unroll_steps, int width,
                               std::uint64_t seed, bool shared_denoiser) {
  RandomStream rng(seed);
  ModelParams p;
  p.unroll_steps = unroll_steps;
  p.shared_denoiser = shared_denoiser;
  const int n_denoisers = shared_denoiser ? 1 : unroll_steps;
  for (int k = 0; k < n_denoisers; ++k)
    p.denoisers.push_back(make_unet2(2, 2, width, /*residual=*/false, rng));
  p.csm_net = make_unet2(2 * n_coils, 2 * n_coils, width, /*residual=*/true, rng);
  p.step_sizes.assign(unroll_steps, 1.0);
  p.reg_weights.assign(unroll_steps, 0.1);
  p.validate();
  return p;
}

namespace {

// Per coil: ifft2c(mask o fft2c(u)). Hermitian, and the linear part of the
// data-consistency gradient.
MultiCoilImage masked_normal(const MultiCoilImage& u, const SamplingMask& mask) {
  MultiCoilImage k = fft2c(u);
  apply_mask_rows(k, mask);
  return ifft2c(k);
}

ComplexImage run_denoiser(const CnnParams& net, const ComplexImage& input,
                          CnnTape* tape) {
  return channels_to_complex_image(cnn_forward(net, complex_to_channels(input), tape));
}

}  // namespace

ReconResult spicer_reconstruct(const MultiCoilKspace& y, const ModelParams& params,
                               UnrollTrace* trace) {
  params.validate();
  if (y.mask.acs_lines.empty())
    throw ValidationError("spicer_reconstruct: measurement has no ACS lines");

  CoilSensitivities csm;
  if (params.csm_mode == CsmMode::learned) {
    csm = estimate_csm_network(y, params.csm_net, params.fov_threshold,
                               trace ? &trace->csm_trace : nullptr);
    if (trace) trace->learned_csm = true;
  } else {
    csm = estimate_csm_classical(y, params.fov_threshold);
    if (trace) trace->learned_csm = false;
  }

  const int steps = params.unroll_steps;
  MultiCoilImage c = ifft2c(y.data);
  if (trace) {
    trace->c_states.clear();
    trace->combined.clear();
    trace->denoiser_tapes.assign(steps, CnnTape{});
    trace->denoised.clear();
    trace->dc_terms.clear();
    trace->reg_terms.clear();
    trace->c_states.push_back(c);
    trace->mask = y.mask;
    trace->steps = steps;
    trace->csm = csm;
  }

  for (int k = 0; k < steps; ++k) {
    auto dc = dc_gradient(c, y);
    auto combined = coil_combine(c, csm);
    auto denoised = run_denoiser(params.denoiser(k), combined,
                                 trace ? &trace->denoiser_tapes[k] : nullptr);
    auto reg = coil_expand(denoised, csm);

    const double gamma = params.step_sizes[k];
    const double tau = params.reg_weights[k];
    for (size_t p = 0; p < c.data.size(); ++p)
      c.data[p] -= gamma * (dc.data[p] + tau * reg.data[p]);

    if (trace) {
      trace->c_states.push_back(c);
      trace->combined.push_back(std::move(combined));
      trace->denoised.push_back(std::move(denoised));
      trace->dc_terms.push_back(std::move(dc));
      trace->reg_terms.push_back(std::move(reg));
    }
  }

  ReconResult out;
  out.image = coil_combine(c, csm);
  out.csm = std::move(csm);
  check_finite(out.image, "spicer_reconstruct");
  return out;
}

ModelGrads::ModelGrads(const ModelParams& params) : csm_net(params.csm_net) {
  for (const auto& d : params.denoisers) denoisers.emplace_back(d);
  step_sizes.assign(params.step_sizes.size(), 0.0);
  reg_weights.assign(params.reg_weights.size(), 0.0);
}

void ModelGrads::add_scaled(const ModelGrads& other, double scale) {
  for (size_t i = 0; i < denoisers.size(); ++i)
    denoisers[i].add_scaled(other.denoisers[i], scale);
  csm_net.add_scaled(other.csm_net, scale);
  for (size_t i = 0; i < step_sizes.size(); ++i)
    step_sizes[i] += scale * other.step_sizes[i];
  for (size_t i = 0; i < reg_weights.size(); ++i)
    reg_weights[i] += scale * other.reg_weights[i];
}

namespace {

// Re sum_p a_p conj(b_p)
double real_inner(const MultiCoilImage& a, const MultiCoilImage& b) {
  double acc = 0.0;
  for (size_t p = 0; p < a.data.size(); ++p)
    acc += a.data[p].real() * b.data[p].real() + a.data[p].imag() * b.data[p].imag();
  return acc;
}

}  // namespace

void unroll_backward(const ModelParams& params, const UnrollTrace& trace,
                     const ComplexImage& grad_image,
                     const MultiCoilImage* grad_csm_extra, ModelGrads& grads) {
  params.validate();
  if (trace.steps != params.unroll_steps ||
      trace.c_states.size() != size_t(trace.steps) + 1)
    throw ValidationError("unroll_backward: trace does not match these parameters");

  const auto& csm = trace.csm;
  const int nc = csm.n_coils();
  const int h = csm.height();
  const int w = csm.width();
  const size_t plane = size_t(h) * w;

  MultiCoilImage grad_csm(nc, h, w);
  if (grad_csm_extra) {
    if (!grad_csm.same_shape(*grad_csm_extra))
      throw ValidationError("unroll_backward: grad_csm_extra shape mismatch");
    grad_csm = *grad_csm_extra;
  }

  // Final combine: image = sum_k conj(S_k) c_k.
  const auto& c_final = trace.c_states.back();
  MultiCoilImage grad_c(nc, h, w);
  for (int k = 0; k < nc; ++k) {
    const cxd* s = csm.maps.coil(k);
    const cxd* c = c_final.coil(k);
    cxd* gc = grad_c.coil(k);
    cxd* gs = grad_csm.coil(k);
    for (size_t p = 0; p < plane; ++p) {
      gc[p] = s[p] * grad_image.data[p];
      gs[p] += std::conj(grad_image.data[p]) * c[p];
    }
  }

  for (int k = trace.steps - 1; k >= 0; --k) {
    const double gamma = params.step_sizes[k];
    const double tau = params.reg_weights[k];
    const auto& dc = trace.dc_terms[k];
    const auto& reg = trace.reg_terms[k];
    const auto& c_k = trace.c_states[k];
    const auto& denoised = trace.denoised[k];

    // c_{k+1} = c_k - gamma (dc + tau reg)
    grads.step_sizes[k] -= real_inner(dc, grad_c) + tau * real_inner(reg, grad_c);
    grads.reg_weights[k] -= gamma * real_inner(reg, grad_c);

    // Cotangent into the update direction.
    MultiCoilImage u(nc, h, w);
    for (size_t p = 0; p < u.data.size(); ++p) u.data[p] = -gamma * grad_c.data[p];

    // reg = expand(denoised, S)
    ComplexImage grad_denoised(h, w);
    for (int j = 0; j < nc; ++j) {
      const cxd* s = csm.maps.coil(j);
      const cxd* uj = u.coil(j);
      cxd* gs = grad_csm.coil(j);
      for (size_t p = 0; p < plane; ++p) {
        const cxd wu = tau * uj[p];
        grad_denoised.data[p] += std::conj(s[p]) * wu;
        if (!params.stop_in_loop_csm_grad)
          gs[p] += std::conj(denoised.data[p]) * wu;
      }
    }

    // through the denoiser CNN
    const int net_idx = params.shared_denoiser ? 0 : k;
    const Tensor grad_comb_t =
        cnn_backward(params.denoisers[net_idx], trace.denoiser_tapes[k],
                     complex_to_channels(grad_denoised), grads.denoisers[net_idx]);
    const ComplexImage grad_combined = channels_to_complex_image(grad_comb_t);

    // combined = sum_j conj(S_j) c_j ; dc linear part is Hermitian
    MultiCoilImage next_grad_c = masked_normal(u, trace.mask);
    for (int j = 0; j < nc; ++j) {
      const cxd* s = csm.maps.coil(j);
      const cxd* cj = c_k.coil(j);
      cxd* ng = next_grad_c.coil(j);
      cxd* gs = grad_csm.coil(j);
      const cxd* gcur = grad_c.coil(j);
      for (size_t p = 0; p < plane; ++p) {
        ng[p] += gcur[p] + s[p] * grad_combined.data[p];
        if (!params.stop_in_loop_csm_grad)
          gs[p] += std::conj(grad_combined.data[p]) * cj[p];
      }
    }
    grad_c = std::move(next_grad_c);
  }

  if (trace.learned_csm && params.csm_mode == CsmMode::learned)
    csm_network_backward(params.csm_net, trace.csm_trace, grad_csm, grads.csm_net);
}

std::vector<double*> param_ptrs(ModelParams& params) {
  std::vector<double*> out;
  for (auto& d : params.denoisers) {
    auto v = param_ptrs(d);
    out.insert(out.end(), v.begin(), v.end());
  }
  auto v = param_ptrs(params.csm_net);
  out.insert(out.end(), v.begin(), v.end());
  for (auto& s : params.step_sizes) out.push_back(&s);
  for (auto& t : params.reg_weights) out.push_back(&t);
  return out;
}

std::vector<double> grad_values(const ModelGrads& grads) {
  std::vector<double> out;
  for (const auto& d : grads.denoisers)
    for (const double* p : grad_ptrs(d)) out.push_back(*p);
  for (const double* p : grad_ptrs(grads.csm_net)) out.push_back(*p);
  for (double s : grads.step_sizes) out.push_back(s);
  for (double t : grads.reg_weights) out.push_back(t);
  return out;
}

}  // namespace spicer

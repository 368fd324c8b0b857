#include "spicer/cnn.hpp"

#include <cmath>

namespace spicer {

Tensor complex_to_channels(const ComplexImage& x) {
  Tensor t(2, x.height, x.width);
  double* re = t.plane(0);
  double* im = t.plane(1);
  for (size_t p = 0; p < x.data.size(); ++p) {
    re[p] = x.data[p].real();
    im[p] = x.data[p].imag();
  }
  return t;
}

Tensor complex_to_channels(const MultiCoilImage& x) {
  Tensor t(2 * x.n_coils, x.height, x.width);
  const size_t plane = x.plane_size();
  for (int k = 0; k < x.n_coils; ++k) {
    const cxd* src = x.coil(k);
    double* re = t.plane(2 * k);
    double* im = t.plane(2 * k + 1);
    for (size_t p = 0; p < plane; ++p) {
      re[p] = src[p].real();
      im[p] = src[p].imag();
    }
  }
  return t;
}

ComplexImage channels_to_complex_image(const Tensor& t) {
  if (t.channels != 2)
    throw ValidationError("channels_to_complex_image: need exactly 2 channels");
  ComplexImage out(t.height, t.width);
  const double* re = t.plane(0);
  const double* im = t.plane(1);
  for (size_t p = 0; p < out.data.size(); ++p) out.data[p] = cxd(re[p], im[p]);
  return out;
}

MultiCoilImage channels_to_multicoil(const Tensor& t) {
  if (t.channels % 2 != 0)
    throw ValidationError("channels_to_multicoil: odd channel count");
  MultiCoilImage out(t.channels / 2, t.height, t.width);
  const size_t plane = out.plane_size();
  for (int k = 0; k < out.n_coils; ++k) {
    const double* re = t.plane(2 * k);
    const double* im = t.plane(2 * k + 1);
    cxd* dst = out.coil(k);
    for (size_t p = 0; p < plane; ++p) dst[p] = cxd(re[p], im[p]);
  }
  return out;
}

size_t CnnParams::param_count() const {
  size_t n = 0;
  for (const auto& l : layers) n += l.param_count();
  return n;
}

int CnnParams::receptive_border() const {
  // Each 3x3 conv widens the border its zero padding can reach by one pixel
  // at its own scale; convs below a 2x pool count double.
  int border = 0;
  int scale = 1;
  for (const auto& ins : program) {
    switch (ins.op) {
      case CnnOp::conv: border += scale; break;
      case CnnOp::pool2: scale *= 2; break;
      case CnnOp::upsample2: scale /= 2; break;
      default: break;
    }
  }
  return border;
}

namespace {

void kaiming_uniform(ConvLayer& layer, RandomStream& rng) {
  const double bound = std::sqrt(6.0 / double(layer.in_ch * 9));
  for (auto& w : layer.weights) w = rng.uniform(-bound, bound);
  // biases stay zero
}

}  // namespace

CnnParams make_plain_cnn(int in_ch, int out_ch, int width, int n_layers,
                         bool residual, RandomStream& rng) {
  if (n_layers < 1) throw ValidationError("make_plain_cnn: need at least one layer");
  if (residual && in_ch != out_ch)
    throw ValidationError("make_plain_cnn: residual needs in_ch == out_ch");
  CnnParams p;
  p.kind = CnnKind::plain;
  p.in_channels = in_ch;
  p.out_channels = out_ch;
  p.width = width;
  p.residual = residual;
  for (int i = 0; i < n_layers; ++i) {
    const int ic = i == 0 ? in_ch : width;
    const int oc = i == n_layers - 1 ? out_ch : width;
    p.layers.emplace_back(ic, oc);
    if (i + 1 < n_layers) kaiming_uniform(p.layers.back(), rng);
    p.program.push_back({CnnOp::conv, i});
    if (i + 1 < n_layers) p.program.push_back({CnnOp::relu, 0});
  }
  if (residual) p.program.push_back({CnnOp::add_input, 0});
  return p;
}

CnnParams make_unet2(int in_ch, int out_ch, int width, bool residual,
                     RandomStream& rng) {
  if (residual && in_ch != out_ch)
    throw ValidationError("make_unet2: residual needs in_ch == out_ch");
  CnnParams p;
  p.kind = CnnKind::unet2;
  p.in_channels = in_ch;
  p.out_channels = out_ch;
  p.width = width;
  p.residual = residual;

  const int w = width;
  p.layers.emplace_back(in_ch, w);      // 0 encoder
  p.layers.emplace_back(w, w);          // 1
  p.layers.emplace_back(w, 2 * w);      // 2 bottleneck
  p.layers.emplace_back(2 * w, 2 * w);  // 3
  p.layers.emplace_back(3 * w, w);      // 4 decoder (current 2w + skip w)
  p.layers.emplace_back(w, w);          // 5
  p.layers.emplace_back(w, out_ch);     // 6 head, zero-initialized
  for (int i = 0; i < 6; ++i) kaiming_uniform(p.layers[i], rng);

  p.program = {
      {CnnOp::conv, 0}, {CnnOp::relu, 0}, {CnnOp::conv, 1}, {CnnOp::relu, 0},
      {CnnOp::save, 0},
      {CnnOp::pool2, 0},
      {CnnOp::conv, 2}, {CnnOp::relu, 0}, {CnnOp::conv, 3}, {CnnOp::relu, 0},
      {CnnOp::upsample2, 0},
      {CnnOp::concat, 0},
      {CnnOp::conv, 4}, {CnnOp::relu, 0}, {CnnOp::conv, 5}, {CnnOp::relu, 0},
      {CnnOp::conv, 6},
  };
  if (residual) p.program.push_back({CnnOp::add_input, 0});
  return p;
}

namespace {

std::vector<int> make_signature(const CnnParams& params) {
  std::vector<int> sig{int(params.kind), params.in_channels, params.out_channels,
                       int(params.layers.size())};
  for (const auto& l : params.layers) {
    sig.push_back(l.in_ch);
    sig.push_back(l.out_ch);
  }
  return sig;
}

// out[oc] = bias[oc] + sum_ic W[oc][ic] (*) in[ic], 3x3 zero-padded.
void conv3x3(const ConvLayer& layer, const Tensor& in, Tensor& out) {
  const int h = in.height, w = in.width;
  out = Tensor(layer.out_ch, h, w);
  for (int oc = 0; oc < layer.out_ch; ++oc) {
    double* op = out.plane(oc);
    const double b = layer.bias[oc];
    for (size_t p = 0; p < out.plane_size(); ++p) op[p] = b;
    for (int ic = 0; ic < layer.in_ch; ++ic) {
      const double* ip = in.plane(ic);
      const double* wp = layer.weights.data() + (size_t(oc) * layer.in_ch + ic) * 9;
      for (int ky = 0; ky < 3; ++ky) {
        const int y0 = std::max(0, 1 - ky);
        const int y1 = std::min(h, h + 1 - ky);
        for (int kx = 0; kx < 3; ++kx) {
          const double wk = wp[ky * 3 + kx];
          if (wk == 0.0) continue;
          const int x0 = std::max(0, 1 - kx);
          const int x1 = std::min(w, w + 1 - kx);
          for (int y = y0; y < y1; ++y) {
            const double* irow = ip + size_t(y + ky - 1) * w + (kx - 1);
            double* orow = op + size_t(y) * w;
            for (int x = x0; x < x1; ++x) orow[x] += wk * irow[x];
          }
        }
      }
    }
  }
}

// grad_in[ic] += sum_oc flip(W[oc][ic]) (*) grad_out[oc]
void conv3x3_grad_input(const ConvLayer& layer, const Tensor& grad_out,
                        Tensor& grad_in) {
  const int h = grad_out.height, w = grad_out.width;
  grad_in = Tensor(layer.in_ch, h, w);
  for (int oc = 0; oc < layer.out_ch; ++oc) {
    const double* gp = grad_out.plane(oc);
    for (int ic = 0; ic < layer.in_ch; ++ic) {
      double* dp = grad_in.plane(ic);
      const double* wp = layer.weights.data() + (size_t(oc) * layer.in_ch + ic) * 9;
      for (int ky = 0; ky < 3; ++ky) {
        const int fy = 2 - ky;
        const int y0 = std::max(0, 1 - fy);
        const int y1 = std::min(h, h + 1 - fy);
        for (int kx = 0; kx < 3; ++kx) {
          const double wk = wp[ky * 3 + kx];
          if (wk == 0.0) continue;
          const int fx = 2 - kx;
          const int x0 = std::max(0, 1 - fx);
          const int x1 = std::min(w, w + 1 - fx);
          for (int y = y0; y < y1; ++y) {
            const double* grow = gp + size_t(y + fy - 1) * w + (fx - 1);
            double* drow = dp + size_t(y) * w;
            for (int x = x0; x < x1; ++x) drow[x] += wk * grow[x];
          }
        }
      }
    }
  }
}

// grad_W[oc][ic][ky][kx] += sum_{y,x} grad_out[oc][y][x] * in[ic][y+ky-1][x+kx-1]
void conv3x3_grad_weights(const Tensor& in, const Tensor& grad_out,
                          ConvLayer& grads) {
  const int h = in.height, w = in.width;
  for (int oc = 0; oc < grads.out_ch; ++oc) {
    const double* gp = grad_out.plane(oc);
    double bsum = 0.0;
    for (size_t p = 0; p < grad_out.plane_size(); ++p) bsum += gp[p];
    grads.bias[oc] += bsum;
    for (int ic = 0; ic < grads.in_ch; ++ic) {
      const double* ip = in.plane(ic);
      double* wp = grads.weights.data() + (size_t(oc) * grads.in_ch + ic) * 9;
      for (int ky = 0; ky < 3; ++ky) {
        const int y0 = std::max(0, 1 - ky);
        const int y1 = std::min(h, h + 1 - ky);
        for (int kx = 0; kx < 3; ++kx) {
          const int x0 = std::max(0, 1 - kx);
          const int x1 = std::min(w, w + 1 - kx);
          double acc = 0.0;
          for (int y = y0; y < y1; ++y) {
            const double* irow = ip + size_t(y + ky - 1) * w + (kx - 1);
            const double* grow = gp + size_t(y) * w;
            for (int x = x0; x < x1; ++x) acc += grow[x] * irow[x];
          }
          wp[ky * 3 + kx] += acc;
        }
      }
    }
  }
}

Tensor avg_pool2(const Tensor& in) {
  if (in.height % 2 != 0 || in.width % 2 != 0)
    throw ValidationError("cnn_forward: grid not divisible by 2 at pooling");
  Tensor out(in.channels, in.height / 2, in.width / 2);
  for (int ch = 0; ch < in.channels; ++ch) {
    const double* ip = in.plane(ch);
    double* op = out.plane(ch);
    for (int y = 0; y < out.height; ++y)
      for (int x = 0; x < out.width; ++x) {
        const double* r0 = ip + size_t(2 * y) * in.width + 2 * x;
        const double* r1 = r0 + in.width;
        op[size_t(y) * out.width + x] = 0.25 * (r0[0] + r0[1] + r1[0] + r1[1]);
      }
  }
  return out;
}

Tensor avg_pool2_backward(const Tensor& grad_out, int in_h, int in_w) {
  Tensor grad_in(grad_out.channels, in_h, in_w);
  for (int ch = 0; ch < grad_out.channels; ++ch) {
    const double* gp = grad_out.plane(ch);
    double* dp = grad_in.plane(ch);
    for (int y = 0; y < grad_out.height; ++y)
      for (int x = 0; x < grad_out.width; ++x) {
        const double g = 0.25 * gp[size_t(y) * grad_out.width + x];
        double* r0 = dp + size_t(2 * y) * in_w + 2 * x;
        double* r1 = r0 + in_w;
        r0[0] = g;
        r0[1] = g;
        r1[0] = g;
        r1[1] = g;
      }
  }
  return grad_in;
}

Tensor upsample2(const Tensor& in) {
  Tensor out(in.channels, in.height * 2, in.width * 2);
  for (int ch = 0; ch < in.channels; ++ch) {
    const double* ip = in.plane(ch);
    double* op = out.plane(ch);
    for (int y = 0; y < in.height; ++y)
      for (int x = 0; x < in.width; ++x) {
        const double v = ip[size_t(y) * in.width + x];
        double* r0 = op + size_t(2 * y) * out.width + 2 * x;
        double* r1 = r0 + out.width;
        r0[0] = v;
        r0[1] = v;
        r1[0] = v;
        r1[1] = v;
      }
  }
  return out;
}

Tensor upsample2_backward(const Tensor& grad_out) {
  Tensor grad_in(grad_out.channels, grad_out.height / 2, grad_out.width / 2);
  for (int ch = 0; ch < grad_out.channels; ++ch) {
    const double* gp = grad_out.plane(ch);
    double* dp = grad_in.plane(ch);
    for (int y = 0; y < grad_in.height; ++y)
      for (int x = 0; x < grad_in.width; ++x) {
        const double* r0 = gp + size_t(2 * y) * grad_out.width + 2 * x;
        const double* r1 = r0 + grad_out.width;
        dp[size_t(y) * grad_in.width + x] = r0[0] + r0[1] + r1[0] + r1[1];
      }
  }
  return grad_in;
}

}  // namespace

bool CnnTape::matches(const CnnParams& params) const {
  return signature == make_signature(params);
}

CnnGrads::CnnGrads(const CnnParams& params) {
  layers.reserve(params.layers.size());
  for (const auto& l : params.layers) layers.emplace_back(l.in_ch, l.out_ch);
}

void CnnGrads::add_scaled(const CnnGrads& other, double scale) {
  for (size_t i = 0; i < layers.size(); ++i) {
    for (size_t j = 0; j < layers[i].weights.size(); ++j)
      layers[i].weights[j] += scale * other.layers[i].weights[j];
    for (size_t j = 0; j < layers[i].bias.size(); ++j)
      layers[i].bias[j] += scale * other.layers[i].bias[j];
  }
}

Tensor cnn_forward(const CnnParams& params, const Tensor& input, CnnTape* tape) {
  if (input.channels != params.in_channels)
    throw ValidationError("cnn_forward: input has " + std::to_string(input.channels) +
                          " channels, network expects " +
                          std::to_string(params.in_channels));
  const int div = 1 << params.pool_depth();
  if (input.height % div != 0 || input.width % div != 0)
    throw ValidationError("cnn_forward: H and W must be divisible by " +
                          std::to_string(div));

  if (tape) {
    tape->input = input;
    tape->stash.assign(params.program.size(), Tensor{});
    tape->signature = make_signature(params);
  }

  Tensor cur = input;
  std::vector<Tensor> slots(2);
  for (size_t i = 0; i < params.program.size(); ++i) {
    const auto& ins = params.program[i];
    switch (ins.op) {
      case CnnOp::conv: {
        if (tape) tape->stash[i] = cur;
        Tensor out;
        conv3x3(params.layers[ins.arg], cur, out);
        cur = std::move(out);
        break;
      }
      case CnnOp::relu: {
        for (auto& v : cur.v) v = v > 0.0 ? v : 0.0;
        if (tape) tape->stash[i] = cur;
        break;
      }
      case CnnOp::pool2:
        cur = avg_pool2(cur);
        break;
      case CnnOp::upsample2:
        cur = upsample2(cur);
        break;
      case CnnOp::save:
        slots[ins.arg] = cur;
        break;
      case CnnOp::concat: {
        const Tensor& saved = slots[ins.arg];
        if (saved.height != cur.height || saved.width != cur.width)
          throw ValidationError("cnn_forward: concat shape mismatch");
        Tensor out(cur.channels + saved.channels, cur.height, cur.width);
        std::copy(cur.v.begin(), cur.v.end(), out.v.begin());
        std::copy(saved.v.begin(), saved.v.end(), out.v.begin() + cur.v.size());
        if (tape) {
          // remember the split point
          Tensor marker(1, 8, 8);
          marker.v[0] = double(cur.channels);
          tape->stash[i] = std::move(marker);
        }
        cur = std::move(out);
        break;
      }
      case CnnOp::add_input: {
        for (size_t p = 0; p < cur.v.size(); ++p) cur.v[p] += input.v[p];
        break;
      }
    }
  }
  if (tape) tape->output = cur;
  return cur;
}

Tensor cnn_backward(const CnnParams& params, const CnnTape& tape,
                    const Tensor& grad_out, CnnGrads& grads) {
  if (!tape.matches(params))
    throw ValidationError("cnn_backward: tape does not match these parameters");
  if (!grad_out.same_shape(tape.output))
    throw ValidationError("cnn_backward: cotangent shape mismatch");

  Tensor grad = grad_out;
  Tensor grad_input_extra;  // residual path
  std::vector<Tensor> slot_grads(2);

  for (size_t idx = params.program.size(); idx-- > 0;) {
    const auto& ins = params.program[idx];
    switch (ins.op) {
      case CnnOp::conv: {
        const Tensor& saved_in = tape.stash[idx];
        conv3x3_grad_weights(saved_in, grad, grads.layers[ins.arg]);
        Tensor gin;
        conv3x3_grad_input(params.layers[ins.arg], grad, gin);
        grad = std::move(gin);
        break;
      }
      case CnnOp::relu: {
        const Tensor& out = tape.stash[idx];
        for (size_t p = 0; p < grad.v.size(); ++p)
          if (out.v[p] <= 0.0) grad.v[p] = 0.0;
        break;
      }
      case CnnOp::pool2:
        grad = avg_pool2_backward(grad, grad.height * 2, grad.width * 2);
        break;
      case CnnOp::upsample2:
        grad = upsample2_backward(grad);
        break;
      case CnnOp::save: {
        Tensor& sg = slot_grads[ins.arg];
        if (sg.v.empty()) break;
        if (grad.v.empty()) {
          grad = std::move(sg);
        } else {
          for (size_t p = 0; p < grad.v.size(); ++p) grad.v[p] += sg.v[p];
        }
        break;
      }
      case CnnOp::concat: {
        const int cur_ch = int(tape.stash[idx].v[0]);
        Tensor first(cur_ch, grad.height, grad.width);
        Tensor second(grad.channels - cur_ch, grad.height, grad.width);
        std::copy(grad.v.begin(), grad.v.begin() + first.v.size(), first.v.begin());
        std::copy(grad.v.begin() + first.v.size(), grad.v.end(), second.v.begin());
        slot_grads[ins.arg] = std::move(second);
        grad = std::move(first);
        break;
      }
      case CnnOp::add_input:
        grad_input_extra = grad;
        break;
    }
  }

  if (!grad_input_extra.v.empty())
    for (size_t p = 0; p < grad.v.size(); ++p) grad.v[p] += grad_input_extra.v[p];
  return grad;
}

std::vector<double*> param_ptrs(CnnParams& params) {
  std::vector<double*> out;
  for (auto& l : params.layers) {
    for (auto& w : l.weights) out.push_back(&w);
    for (auto& b : l.bias) out.push_back(&b);
  }
  return out;
}

std::vector<const double*> param_ptrs(const CnnParams& params) {
  std::vector<const double*> out;
  for (const auto& l : params.layers) {
    for (const auto& w : l.weights) out.push_back(&w);
    for (const auto& b : l.bias) out.push_back(&b);
  }
  return out;
}

std::vector<const double*> grad_ptrs(const CnnGrads& grads) {
  std::vector<const double*> out;
  for (const auto& l : grads.layers) {
    for (const auto& w : l.weights) out.push_back(&w);
    for (const auto& b : l.bias) out.push_back(&b);
  }
  return out;
}

void adam_step(std::vector<double*>& params, const std::vector<double>& grads,
               AdamState& state, double lr) {
  if (params.size() != grads.size() || params.size() != state.m.size())
    throw ValidationError("adam_step: parameter/gradient/state size mismatch");
  for (double g : grads)
    if (!std::isfinite(g)) throw NumericError("adam_step: non-finite gradient");

  state.step_count += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, double(state.step_count));
  const double bc2 = 1.0 - std::pow(state.beta2, double(state.step_count));
  for (size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g;
    const double mhat = state.m[i] / bc1;
    const double vhat = state.v[i] / bc2;
    *params[i] -= lr * mhat / (std::sqrt(vhat) + state.eps);
  }
}

}  // namespace spicer

#pragma once

#include <cstdint>
#include <vector>

#include "spicer/rng.hpp"
#include "spicer/types.hpp"

namespace spicer {

// Real-valued channel stack [ch][row][col], the tensor type the network
// runs on. Complex data enters as (re, im) channel pairs per coil.
struct Tensor {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<double> v;

  Tensor() = default;
  Tensor(int ch, int h, int w) : channels(ch), height(h), width(w),
                                 v(size_t(ch) * h * w, 0.0) {}
  size_t plane_size() const { return size_t(height) * width; }
  double* plane(int ch) { return v.data() + size_t(ch) * plane_size(); }
  const double* plane(int ch) const { return v.data() + size_t(ch) * plane_size(); }
  bool same_shape(const Tensor& o) const {
    return channels == o.channels && height == o.height && width == o.width;
  }
};

Tensor complex_to_channels(const ComplexImage& x);
Tensor complex_to_channels(const MultiCoilImage& x);
ComplexImage channels_to_complex_image(const Tensor& t);
MultiCoilImage channels_to_multicoil(const Tensor& t);

// One 3x3 zero-padded convolution. Weights are [out_ch][in_ch][3][3]
// row-major, biases [out_ch].
struct ConvLayer {
  int in_ch = 0;
  int out_ch = 0;
  std::vector<double> weights;
  std::vector<double> bias;

  ConvLayer() = default;
  ConvLayer(int ic, int oc)
      : in_ch(ic), out_ch(oc), weights(size_t(oc) * ic * 9, 0.0), bias(oc, 0.0) {}
  size_t param_count() const { return weights.size() + bias.size(); }
};

// Network programs are tiny instruction lists over a running activation,
// with one save/concat slot pair for the U-Net skip.
enum class CnnOp : std::uint8_t {
  conv,       // arg = layer index
  relu,
  pool2,      // 2x2 average pool
  upsample2,  // nearest-neighbor 2x
  save,       // arg = slot
  concat,     // arg = slot; appends saved channels after current ones
  add_input,  // residual connection from the network input
};

struct CnnInstr {
  CnnOp op;
  int arg = 0;
};

enum class CnnKind : std::uint8_t { plain, unet2 };

struct CnnParams {
  CnnKind kind = CnnKind::plain;
  int in_channels = 0;
  int out_channels = 0;
  int width = 0;
  bool residual = false;
  std::vector<ConvLayer> layers;
  std::vector<CnnInstr> program;

  size_t param_count() const;
  // Downsampling depth; input H and W must be divisible by 2^depth.
  int pool_depth() const { return kind == CnnKind::unet2 ? 1 : 0; }
  // Pixels near the border that a (2,2)-shift equivariance test must skip.
  int receptive_border() const;
};

// Plain conv stack: n_layers 3x3 convs with ReLU between them (none after
// the last). Final layer zero-initialized, hidden layers Kaiming-uniform.
CnnParams make_plain_cnn(int in_ch, int out_ch, int width, int n_layers,
                         bool residual, RandomStream& rng);

// Two-scale U-Net: [conv conv] pool [conv conv] upsample concat [conv conv]
// conv, widths (w, 2w), zero-initialized final layer.
CnnParams make_unet2(int in_ch, int out_ch, int width, bool residual,
                     RandomStream& rng);

// Activations recorded by cnn_forward for the exact backward pass.
struct CnnTape {
  Tensor input;
  std::vector<Tensor> stash;  // per instruction: conv inputs / relu outputs
  Tensor output;
  std::vector<int> signature;  // layer shapes, guards against stale tapes

  bool matches(const CnnParams& params) const;
};

struct CnnGrads {
  std::vector<ConvLayer> layers;  // same shapes as params, holding gradients

  explicit CnnGrads(const CnnParams& params);
  void add_scaled(const CnnGrads& other, double scale);
};

Tensor cnn_forward(const CnnParams& params, const Tensor& input, CnnTape* tape);

// Exact reverse-mode gradients of the recorded computation. Returns the
// gradient w.r.t. the network input; parameter gradients accumulate into
// `grads`.
Tensor cnn_backward(const CnnParams& params, const CnnTape& tape,
                    const Tensor& grad_out, CnnGrads& grads);

// Flat views over all trainable scalars, in checkpoint order (per layer:
// weights then bias).
std::vector<double*> param_ptrs(CnnParams& params);
std::vector<const double*> param_ptrs(const CnnParams& params);
std::vector<const double*> grad_ptrs(const CnnGrads& grads);

// Standard Adam with bias correction over a flat parameter vector.
struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::int64_t step_count = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  explicit AdamState(size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
};

void adam_step(std::vector<double*>& params, const std::vector<double>& grads,
               AdamState& state, double lr);

}  // namespace spicer

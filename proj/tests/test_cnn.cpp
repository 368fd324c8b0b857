#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "spicer/cnn.hpp"

using namespace spicer;

namespace {

Tensor random_tensor(int ch, int h, int w, RandomStream& rng) {
  Tensor t(ch, h, w);
  for (auto& v : t.v) v = rng.uniform(-1.0, 1.0);
  return t;
}

double scalar_probe(const Tensor& out, const Tensor& probe) {
  double acc = 0.0;
  for (size_t p = 0; p < out.v.size(); ++p) acc += out.v[p] * probe.v[p];
  return acc;
}

}  // namespace

TEST_CASE("complex/channel round trip is bit-exact, re before im") {
  RandomStream rng(1);
  MultiCoilImage img(3, 8, 8);
  for (auto& v : img.data) v = rng.complex_gaussian();
  const auto t = complex_to_channels(img);
  CHECK(t.channels == 6);
  const auto back = channels_to_multicoil(t);
  CHECK(back.data == img.data);

  // purely real input -> im channels zero
  MultiCoilImage real_img(2, 8, 8);
  for (auto& v : real_img.data) v = cxd(rng.uniform(), 0.0);
  const auto rt = complex_to_channels(real_img);
  for (size_t p = 0; p < rt.plane_size(); ++p) {
    CHECK(rt.plane(1)[p] == 0.0);
    CHECK(rt.plane(3)[p] == 0.0);
  }

  // multiplying by i swaps channels with a sign
  MultiCoilImage rotated = img;
  for (auto& v : rotated.data) v *= cxd(0.0, 1.0);
  const auto tr = complex_to_channels(rotated);
  for (int k = 0; k < 3; ++k)
    for (size_t p = 0; p < t.plane_size(); ++p) {
      CHECK(tr.plane(2 * k)[p] == -t.plane(2 * k + 1)[p]);
      CHECK(tr.plane(2 * k + 1)[p] == t.plane(2 * k)[p]);
    }

  Tensor odd(3, 8, 8);
  CHECK_THROWS_AS((void)channels_to_multicoil(odd), ValidationError);
}

TEST_CASE("zero-weight residual network is the identity") {
  RandomStream rng(2);
  auto net = make_plain_cnn(2, 2, 8, 3, /*residual=*/true, rng);
  for (auto& l : net.layers) {
    std::fill(l.weights.begin(), l.weights.end(), 0.0);
    std::fill(l.bias.begin(), l.bias.end(), 0.0);
  }
  const auto in = random_tensor(2, 16, 16, rng);
  const auto out = cnn_forward(net, in, nullptr);
  CHECK(out.v == in.v);
}

TEST_CASE("default unet head is zero-initialized: output is zero, no residual") {
  RandomStream rng(3);
  const auto net = make_unet2(2, 2, 8, /*residual=*/false, rng);
  const auto in = random_tensor(2, 16, 16, rng);
  const auto out = cnn_forward(net, in, nullptr);
  for (double v : out.v) CHECK(v == 0.0);
}

TEST_CASE("cnn gradients match finite differences on a 2-layer 8x8 net") {
  RandomStream rng(4);
  auto net = make_plain_cnn(2, 2, 6, 2, false, rng);
  for (auto& w : net.layers.back().weights) w = rng.uniform(-0.4, 0.4);
  for (auto& b : net.layers.back().bias) b = rng.uniform(-0.1, 0.1);

  const auto in = random_tensor(2, 8, 8, rng);
  Tensor probe(2, 8, 8);
  for (auto& v : probe.v) v = rng.uniform(-1.0, 1.0);

  CnnTape tape;
  (void)cnn_forward(net, in, &tape);
  CnnGrads grads(net);
  const Tensor grad_in = cnn_backward(net, tape, probe, grads);

  auto pptr = param_ptrs(net);
  const auto gptr = grad_ptrs(grads);
  const double h = 1e-5;
  // every parameter
  for (size_t i = 0; i < pptr.size(); ++i) {
    const double orig = *pptr[i];
    *pptr[i] = orig + h;
    const double fp = scalar_probe(cnn_forward(net, in, nullptr), probe);
    *pptr[i] = orig - h;
    const double fm = scalar_probe(cnn_forward(net, in, nullptr), probe);
    *pptr[i] = orig;
    const double fd = (fp - fm) / (2.0 * h);
    CHECK(std::abs(fd - *gptr[i]) <= 1e-6 * std::max(1.0, std::abs(fd)));
  }
  // and the input gradient
  Tensor in_mut = in;
  for (size_t i = 0; i < in_mut.v.size(); i += 7) {
    const double orig = in_mut.v[i];
    in_mut.v[i] = orig + h;
    const double fp = scalar_probe(cnn_forward(net, in_mut, nullptr), probe);
    in_mut.v[i] = orig - h;
    const double fm = scalar_probe(cnn_forward(net, in_mut, nullptr), probe);
    in_mut.v[i] = orig;
    const double fd = (fp - fm) / (2.0 * h);
    CHECK(std::abs(fd - grad_in.v[i]) <= 1e-6 * std::max(1.0, std::abs(fd)));
  }
}

TEST_CASE("cnn gradients match finite differences on the 2-scale unet") {
  RandomStream rng(5);
  auto net = make_unet2(2, 2, 4, true, rng);
  for (auto& w : net.layers.back().weights) w = rng.uniform(-0.3, 0.3);

  const auto in = random_tensor(2, 8, 8, rng);
  Tensor probe(2, 8, 8);
  for (auto& v : probe.v) v = rng.uniform(-1.0, 1.0);

  CnnTape tape;
  (void)cnn_forward(net, in, &tape);
  CnnGrads grads(net);
  (void)cnn_backward(net, tape, probe, grads);

  auto pptr = param_ptrs(net);
  const auto gptr = grad_ptrs(grads);
  RandomStream pick(6);
  const double h = 1e-5;
  int checked = 0;
  while (checked < 40) {
    const size_t i = pick.uniform_int(pptr.size());
    const double orig = *pptr[i];
    *pptr[i] = orig + h;
    const double fp = scalar_probe(cnn_forward(net, in, nullptr), probe);
    *pptr[i] = orig - h;
    const double fm = scalar_probe(cnn_forward(net, in, nullptr), probe);
    *pptr[i] = orig;
    const double fd = (fp - fm) / (2.0 * h);
    const double an = *gptr[i];
    if (std::abs(fd) < 1e-9 && std::abs(an) < 1e-9) continue;
    CHECK(std::abs(fd - an) <= 1e-5 * std::max({1.0, std::abs(fd), std::abs(an)}));
    ++checked;
  }
}

TEST_CASE("grad_input of a 1-layer linear net is the transposed convolution") {
  RandomStream rng(7);
  auto net = make_plain_cnn(1, 1, 1, 1, false, rng);
  for (auto& w : net.layers[0].weights) w = rng.uniform(-1.0, 1.0);

  const auto in = random_tensor(1, 8, 8, rng);
  Tensor probe(1, 8, 8);
  for (auto& v : probe.v) v = rng.uniform(-1.0, 1.0);

  CnnTape tape;
  (void)cnn_forward(net, in, &tape);
  CnnGrads grads(net);
  const Tensor grad_in = cnn_backward(net, tape, probe, grads);

  // transpose conv: correlate probe with the flipped kernel
  const auto& wts = net.layers[0].weights;
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) {
      double acc = 0.0;
      for (int ky = 0; ky < 3; ++ky)
        for (int kx = 0; kx < 3; ++kx) {
          const int yy = y - (ky - 1), xx = x - (kx - 1);
          if (yy < 0 || yy >= 8 || xx < 0 || xx >= 8) continue;
          acc += wts[ky * 3 + kx] * probe.v[size_t(yy) * 8 + xx];
        }
      CHECK(grad_in.v[size_t(y) * 8 + x] == doctest::Approx(acc).epsilon(1e-12));
    }
}

TEST_CASE("zero cotangent yields zero gradients") {
  RandomStream rng(8);
  auto net = make_unet2(2, 2, 4, false, rng);
  const auto in = random_tensor(2, 8, 8, rng);
  CnnTape tape;
  (void)cnn_forward(net, in, &tape);
  CnnGrads grads(net);
  const Tensor zero(2, 8, 8);
  const Tensor grad_in = cnn_backward(net, tape, zero, grads);
  for (const double* g : grad_ptrs(grads)) CHECK(*g == 0.0);
  for (double v : grad_in.v) CHECK(v == 0.0);
}

TEST_CASE("stale tape is rejected") {
  RandomStream rng(9);
  auto net_a = make_plain_cnn(2, 2, 4, 2, false, rng);
  auto net_b = make_plain_cnn(2, 2, 8, 2, false, rng);
  const auto in = random_tensor(2, 8, 8, rng);
  CnnTape tape;
  (void)cnn_forward(net_a, in, &tape);
  CnnGrads grads(net_b);
  Tensor probe(2, 8, 8);
  CHECK_THROWS_AS((void)cnn_backward(net_b, tape, probe, grads), ValidationError);
}

TEST_CASE("shifting the input shifts the output away from the border") {
  RandomStream rng(17);
  auto net = make_unet2(2, 2, 8, false, rng);
  for (auto& w : net.layers.back().weights) w = rng.uniform(-0.3, 0.3);

  const int n = 32;
  const auto in = random_tensor(2, n, n, rng);
  Tensor shifted(2, n, n);
  for (int ch = 0; ch < 2; ++ch)
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c)
        shifted.v[(size_t(ch) * n + (r + 2) % n) * n + (c + 2) % n] =
            in.v[(size_t(ch) * n + r) * n + c];

  const auto out1 = cnn_forward(net, in, nullptr);
  const auto out2 = cnn_forward(net, shifted, nullptr);

  const int border = net.receptive_border();
  CHECK(border == 9);
  double interior_mismatch = 0.0, full_mismatch = 0.0;
  for (int ch = 0; ch < 2; ++ch)
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) {
        const int rr = (r + 2) % n, cc = (c + 2) % n;
        const double d = std::abs(out1.v[(size_t(ch) * n + r) * n + c] -
                                  out2.v[(size_t(ch) * n + rr) * n + cc]);
        full_mismatch = std::max(full_mismatch, d);
        const bool interior = r >= border && r < n - border && c >= border &&
                              c < n - border && rr >= border && rr < n - border &&
                              cc >= border && cc < n - border;
        if (interior) interior_mismatch = std::max(interior_mismatch, d);
      }
  CHECK(interior_mismatch < 1e-10);
  CHECK(full_mismatch > 1e-3);  // the border really is affected
}

TEST_CASE("forward output stays finite across 100 seeds at default init") {
  for (int seed = 0; seed < 100; ++seed) {
    RandomStream rng(seed);
    auto net = make_unet2(2, 2, 8, false, rng);
    auto in = random_tensor(2, 16, 16, rng);
    const auto out = cnn_forward(net, in, nullptr);
    for (double v : out.v) CHECK(std::isfinite(v));
  }
}

TEST_CASE("default reconstruction denoiser stays inside the parameter budget") {
  RandomStream rng(0);
  const auto net = make_unet2(2, 2, 16, false, rng);
  CHECK(net.param_count() <= 50000);
  CHECK(net.param_count() > 5000);
}

TEST_CASE("divisibility and channel validation") {
  RandomStream rng(10);
  const auto net = make_unet2(2, 2, 4, false, rng);
  Tensor odd(2, 9, 9);
  CHECK_THROWS_AS((void)cnn_forward(net, odd, nullptr), ValidationError);
  Tensor wrong_ch(3, 8, 8);
  CHECK_THROWS_AS((void)cnn_forward(net, wrong_ch, nullptr), ValidationError);
}

TEST_CASE("adam: zero gradient leaves parameters unchanged") {
  double a = 1.5, b = -0.25;
  std::vector<double*> params{&a, &b};
  std::vector<double> grads{0.0, 0.0};
  AdamState state(2);
  adam_step(params, grads, state, 0.1);
  CHECK(a == 1.5);
  CHECK(b == -0.25);
  CHECK(state.step_count == 1);
}

TEST_CASE("adam first step matches the hand-computed scalar case") {
  // g = 2, lr = 0.1: m = 0.2, v = 0.004, mhat = 2, vhat = 4,
  // delta = -0.1 * 2 / (2 + 1e-8).
  double p = 1.0;
  std::vector<double*> params{&p};
  std::vector<double> grads{2.0};
  AdamState state(1);
  adam_step(params, grads, state, 0.1);
  const double expected = 1.0 - 0.1 * 2.0 / (2.0 + 1e-8);
  CHECK(p == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("adam rejects non-finite gradients") {
  double p = 0.0;
  std::vector<double*> params{&p};
  std::vector<double> grads{std::nan("")};
  AdamState state(1);
  CHECK_THROWS_AS(adam_step(params, grads, state, 0.1), NumericError);
}

TEST_CASE("adam runs are bit-identical for identical inputs") {
  auto run = [] {
    RandomStream rng(3);
    double a = 0.2, b = -1.0, c = 0.7;
    std::vector<double*> params{&a, &b, &c};
    AdamState state(3);
    for (int step = 0; step < 10; ++step) {
      std::vector<double> grads{rng.gaussian(), rng.gaussian(), rng.gaussian()};
      adam_step(params, grads, state, 1e-2);
    }
    return std::array<double, 3>{a, b, c};
  };
  CHECK(run() == run());
}

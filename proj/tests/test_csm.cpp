#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "spicer/acquisition.hpp"
#include "spicer/csm_net.hpp"
#include "spicer/fft.hpp"
#include "spicer/operators.hpp"

using namespace spicer;

namespace {

MultiCoilKspace sample_measurement(int nc, int h, int w, double r, int acs,
                                   double noise, std::uint64_t seed) {
  const auto x = make_phantom(h, w, seed, PhantomKind::smooth_random);
  const auto csm = make_coil_maps(nc, h, w, seed);
  const auto mask = make_mask(h, w, r, acs, MaskKind::equispaced, seed % 2);
  RandomStream rng(seed);
  return simulate_kspace(x, csm, mask, noise, rng);
}

double classical_nmse_fixed_region(const ComplexImage& x,
                                   const CoilSensitivities& truth, int acs) {
  const int h = x.height, w = x.width;
  const auto mask = make_mask(h, w, 4.0, acs, MaskKind::equispaced, 0);
  RandomStream rng(0);
  const auto y = simulate_kspace(x, truth, mask, 0.0, rng);
  const auto est = estimate_csm_classical(y, 0.1);
  double peak = 0.0;
  for (const auto& v : x.data) peak = std::max(peak, std::abs(v));
  double num = 0.0, den = 0.0;
  const size_t plane = est.maps.plane_size();
  for (int k = 0; k < truth.n_coils(); ++k)
    for (size_t p = 0; p < plane; ++p) {
      if (std::abs(x.data[p]) < 0.1 * peak) continue;
      num += std::norm(est.maps.data[k * plane + p] - truth.maps.data[k * plane + p]);
      den += std::norm(truth.maps.data[k * plane + p]);
    }
  return num / den;
}

}  // namespace

TEST_CASE("extract_acs keeps exactly the ACS rows and is idempotent") {
  const auto y = sample_measurement(3, 32, 32, 4.0, 8, 0.01, 5);
  const auto acs = extract_acs(y);
  CHECK(acs.mask.selected_lines == y.mask.acs_lines);
  CHECK_NOTHROW(acs.validate());
  const auto twice = extract_acs(acs);
  CHECK(twice.data.data == acs.data.data);
  CHECK(norm2(acs.data) <= norm2(y.data));

  auto no_acs = y;
  no_acs.mask.acs_lines.clear();
  CHECK_THROWS_AS((void)extract_acs(no_acs), ValidationError);
}

TEST_CASE("acs_zero_filled of full-mask data gives the exact coil images") {
  const auto x = make_phantom(32, 32, 0, PhantomKind::shepp_logan);
  const auto csm = make_coil_maps(3, 32, 32, 2);
  const auto mask = make_mask(32, 32, 1.0, 32, MaskKind::equispaced, 0);
  RandomStream rng(0);
  const auto y = simulate_kspace(x, csm, mask, 0.0, rng);
  const auto p0 = acs_zero_filled(extract_acs(y));
  const auto expected = coil_expand(x, csm);
  for (size_t p = 0; p < p0.data.size(); ++p)
    CHECK(std::abs(p0.data[p] - expected.data[p]) < 1e-12);
  // Parseval: energy equals the ACS k-space energy
  const auto acs = extract_acs(y);
  CHECK(norm2(p0) == doctest::Approx(norm2(acs.data)).epsilon(1e-12));
}

TEST_CASE("classical estimator recovers true maps from full noiseless data") {
  const auto x = make_phantom(64, 64, 0, PhantomKind::shepp_logan);
  const auto csm = make_coil_maps(4, 64, 64, 0);
  const auto mask = make_mask(64, 64, 1.0, 64, MaskKind::equispaced, 0);
  RandomStream rng(0);
  const auto y = simulate_kspace(x, csm, mask, 0.0, rng);
  const auto est = estimate_csm_classical(y, 0.1);
  CHECK(est.rss_error() < 1e-8);
  const size_t plane = est.maps.plane_size();
  double worst = 0.0;
  for (int k = 0; k < 4; ++k)
    for (size_t p = 0; p < plane; ++p)
      if (est.fov.data[p])
        worst = std::max(worst, std::abs(est.maps.data[k * plane + p] -
                                         csm.maps.data[k * plane + p]));
  CHECK(worst <= 1e-10);
}

TEST_CASE("classical CSM error grows as the ACS block shrinks (mean trend)") {
  const int h = 256, w = 64;
  const auto truth = make_coil_maps(4, h, w, 0);
  double mean24 = 0.0, mean8 = 0.0, mean5 = 0.0;
  const int n = 6;
  for (int s = 1; s <= n; ++s) {
    auto sm = make_phantom(h, w, s, PhantomKind::smooth_random);
    ComplexImage x(h, w);
    for (size_t p = 0; p < sm.data.size(); ++p) x.data[p] = std::abs(sm.data[p]);
    mean24 += classical_nmse_fixed_region(x, truth, 24) / n;
    mean8 += classical_nmse_fixed_region(x, truth, 8) / n;
    mean5 += classical_nmse_fixed_region(x, truth, 5) / n;
  }
  CHECK(mean24 <= mean8);
  CHECK(mean8 <= mean5);
}

TEST_CASE("rss_normalize is idempotent and scale-invariant") {
  RandomStream rng(3);
  MultiCoilImage maps(3, 16, 16);
  for (auto& v : maps.data) v = rng.complex_gaussian() + cxd(2.0, 0.0);
  BinaryMask fov(16, 16, 1);

  const auto once = rss_normalize(maps, fov);
  const auto twice = rss_normalize(once.maps, fov);
  for (size_t p = 0; p < once.maps.data.size(); ++p)
    CHECK(std::abs(once.maps.data[p] - twice.maps.data[p]) < 1e-12);

  auto scaled = maps;
  for (auto& v : scaled.data) v *= 3.7;
  const auto from_scaled = rss_normalize(scaled, fov);
  CHECK(from_scaled.rss_error() < 1e-12);
  for (size_t p = 0; p < once.maps.data.size(); ++p)
    CHECK(std::abs(from_scaled.maps.data[p] - once.maps.data[p]) < 1e-12);
}

TEST_CASE("rss_normalize single coil has unit magnitude on fov") {
  RandomStream rng(4);
  MultiCoilImage maps(1, 8, 8);
  for (auto& v : maps.data) v = rng.complex_gaussian() + cxd(1.5, 1.5);
  const auto out = rss_normalize(maps, BinaryMask(8, 8, 1));
  for (const auto& v : out.maps.data) CHECK(std::abs(v) == doctest::Approx(1.0));
}

TEST_CASE("rss_normalize underflow error names the affected pixel count") {
  MultiCoilImage maps(2, 8, 8);  // all zero
  maps.at(0, 0, 0) = cxd(1.0, 0.0);
  try {
    (void)rss_normalize(maps, BinaryMask(8, 8, 1));
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("63") != std::string::npos);
  }
}

TEST_CASE("fov_support basics") {
  const auto y = sample_measurement(3, 32, 32, 4.0, 8, 0.0, 9);
  const auto p0 = acs_zero_filled(extract_acs(y));

  const auto tiny = fov_support(p0, 1e-9);
  CHECK(tiny.count() == size_t(32 * 32));

  auto scaled = p0;
  for (auto& v : scaled.data) v *= 123.0;
  CHECK(fov_support(p0, 0.1).data == fov_support(scaled, 0.1).data);

  CHECK_THROWS_AS((void)fov_support(p0, 0.0), ValidationError);
  CHECK_THROWS_AS((void)fov_support(p0, 1.0), ValidationError);
}

TEST_CASE("fov covers the phantom support at threshold 0.1") {
  const auto x = make_phantom(64, 64, 0, PhantomKind::shepp_logan);
  const auto csm = make_coil_maps(4, 64, 64, 0);
  const auto mask = make_mask(64, 64, 4.0, 24, MaskKind::equispaced, 0);
  RandomStream rng(0);
  const auto y = simulate_kspace(x, csm, mask, 0.0, rng);
  const auto est = estimate_csm_classical(y, 0.1);
  size_t support = 0, covered = 0;
  for (size_t p = 0; p < x.data.size(); ++p)
    if (std::abs(x.data[p]) > 0.05) {
      ++support;
      if (est.fov.data[p]) ++covered;
    }
  const double coverage = double(covered) / double(support);
  CHECK(coverage >= 0.99);
  CHECK(coverage == doctest::Approx(0.998273).epsilon(1e-4));  // regression pin
}

TEST_CASE("network estimator with pass-through weights equals the classical one") {
  const auto y = sample_measurement(3, 32, 32, 4.0, 10, 0.01, 13);
  RandomStream rng(21);
  // Zero head + residual connection = identity network out of the box.
  const auto net = make_unet2(6, 6, 8, /*residual=*/true, rng);
  const auto from_net = estimate_csm_network(y, net, 0.1);
  const auto classical = estimate_csm_classical(y, 0.1);
  CHECK(from_net.fov.data == classical.fov.data);
  for (size_t p = 0; p < from_net.maps.data.size(); ++p)
    CHECK(std::abs(from_net.maps.data[p] - classical.maps.data[p]) < 1e-10);
}

TEST_CASE("network estimator output always satisfies the RSS invariant") {
  const auto y = sample_measurement(2, 16, 16, 2.0, 6, 0.02, 31);
  RandomStream rng(31);
  auto net = make_unet2(4, 4, 8, true, rng);
  for (auto& w : net.layers.back().weights) w = rng.uniform(-0.5, 0.5);
  const auto est = estimate_csm_network(y, net, 0.1);
  CHECK(est.rss_error() < 1e-8);
}

TEST_CASE("network estimator gradient matches finite differences") {
  const auto y = sample_measurement(2, 16, 16, 2.0, 6, 0.01, 7);
  RandomStream rng(77);
  auto net = make_unet2(4, 4, 6, true, rng);
  for (auto& w : net.layers.back().weights) w = rng.uniform(-0.3, 0.3);

  // Probe functional: L = Re <S, probe>
  MultiCoilImage probe(2, 16, 16);
  for (auto& v : probe.data) v = rng.complex_gaussian();
  const auto loss_of = [&](const CnnParams& p) {
    const auto est = estimate_csm_network(y, p, 0.1);
    double acc = 0.0;
    for (size_t i = 0; i < est.maps.data.size(); ++i)
      acc += est.maps.data[i].real() * probe.data[i].real() +
             est.maps.data[i].imag() * probe.data[i].imag();
    return acc;
  };

  CsmNetTrace trace;
  (void)estimate_csm_network(y, net, 0.1, &trace);
  CnnGrads grads(net);
  csm_network_backward(net, trace, probe, grads);

  auto pptr = param_ptrs(net);
  const auto gptr = grad_ptrs(grads);
  RandomStream pick(5);
  const double h = 1e-5;
  int checked = 0;
  while (checked < 25) {
    const size_t i = pick.uniform_int(pptr.size());
    const double orig = *pptr[i];
    *pptr[i] = orig + h;
    const double fp = loss_of(net);
    *pptr[i] = orig - h;
    const double fm = loss_of(net);
    *pptr[i] = orig;
    const double fd = (fp - fm) / (2.0 * h);
    const double an = *gptr[i];
    if (std::abs(fd) < 1e-9 && std::abs(an) < 1e-9) continue;
    CHECK(std::abs(fd - an) <= 1e-5 * std::max({1.0, std::abs(fd), std::abs(an)}));
    ++checked;
  }
}

TEST_CASE("combine-expand is the identity on fov for module-produced maps") {
  const auto y = sample_measurement(4, 32, 32, 4.0, 12, 0.01, 3);
  const auto est = estimate_csm_classical(y, 0.1);
  RandomStream rng(8);
  ComplexImage x(32, 32);
  for (auto& v : x.data) v = rng.complex_gaussian();
  const auto back = coil_combine(coil_expand(x, est), est);
  for (size_t p = 0; p < x.data.size(); ++p)
    if (est.fov.data[p]) CHECK(std::abs(back.data[p] - x.data[p]) < 1e-8);
}

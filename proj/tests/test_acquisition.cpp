#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <set>

#include "spicer/dataset_io.hpp"
#include "spicer/fft.hpp"
#include "spicer/io_util.hpp"
#include "spicer/operators.hpp"

using namespace spicer;

TEST_CASE("equispaced mask sampling rates match the benchmark points") {
  struct Case {
    double r;
    int acs;
    double rate;
  };
  for (const auto& c : {Case{4, 24, 0.32}, Case{6, 24, 0.24}, Case{8, 8, 0.15},
                        Case{10, 5, 0.12}}) {
    const auto mask = make_mask(256, 64, c.r, c.acs, MaskKind::equispaced, 0);
    CHECK(std::abs(mask.sampling_rate() - c.rate) <= 0.01);
  }
}

TEST_CASE("R = 1 selects every line") {
  const auto mask = make_mask(64, 64, 1.0, 0, MaskKind::equispaced, 0);
  CHECK(mask.sampling_rate() == 1.0);
  CHECK(mask.full());
}

TEST_CASE("equispaced line count matches the combinatorial formula") {
  for (int h : {64, 128, 256}) {
    for (double r : {4.0, 6.0, 8.0, 10.0}) {
      for (int offset : {0, 1, 2}) {
        const int acs = 12;
        const auto mask = make_mask(h, 64, r, acs, MaskKind::equispaced, 0, offset);
        const int rr = int(std::lround(r));
        std::set<int> equis;
        for (int row = offset; row < h; row += rr) equis.insert(row);
        size_t acs_extra = 0;
        for (int row : centered_acs_lines(h, acs))
          if (!equis.count(row)) ++acs_extra;
        const size_t expected = (h - offset + rr - 1) / rr + acs_extra;
        CHECK(mask.selected_lines.size() == expected);
      }
    }
  }
}

TEST_CASE("random mask matches the equispaced line budget and keeps ACS") {
  const auto equis = make_mask(128, 64, 4.0, 16, MaskKind::equispaced, 0);
  const auto rnd = make_mask(128, 64, 4.0, 16, MaskKind::random, 123);
  CHECK(rnd.selected_lines.size() == equis.selected_lines.size());
  for (int row : rnd.acs_lines) CHECK(rnd.is_selected(row));
  // determinism
  const auto rnd2 = make_mask(128, 64, 4.0, 16, MaskKind::random, 123);
  CHECK(rnd.selected_lines == rnd2.selected_lines);
}

TEST_CASE("mask validation errors") {
  CHECK_THROWS_AS(make_mask(64, 64, 4.0, 300, MaskKind::equispaced, 0),
                  ValidationError);
  CHECK_THROWS_AS(make_mask(64, 64, 4.0, 8, MaskKind::equispaced, 0, 7),
                  ValidationError);
  CHECK_THROWS_AS(make_mask(64, 64, 0.5, 8, MaskKind::equispaced, 0),
                  ValidationError);
}

TEST_CASE("shepp_logan phantom is deterministic with magnitude in [0, 1]") {
  const auto a = make_phantom(64, 64, 0, PhantomKind::shepp_logan);
  const auto b = make_phantom(64, 64, 99, PhantomKind::shepp_logan);
  CHECK(a.data == b.data);
  double peak = 0.0;
  for (const auto& v : a.data) peak = std::max(peak, std::abs(v));
  CHECK(peak <= 1.0 + 1e-12);
  CHECK(peak > 0.5);
  CHECK_THROWS_AS(make_phantom(16, 16, 0, PhantomKind::shepp_logan), ValidationError);
}

TEST_CASE("smooth_random phantoms differ across seeds") {
  const auto p1 = make_phantom(64, 64, 1, PhantomKind::smooth_random);
  const auto p2 = make_phantom(64, 64, 2, PhantomKind::smooth_random);
  double num = 0.0, den = 0.0;
  for (size_t i = 0; i < p1.data.size(); ++i) {
    num += std::norm(p1.data[i] - p2.data[i]);
    den += std::norm(p1.data[i]);
  }
  const double rel = std::sqrt(num / den);
  CHECK(rel > 0.1);
  CHECK(rel == doctest::Approx(1.251345049421).epsilon(1e-9));  // regression pin
  double peak = 0.0;
  for (const auto& v : p1.data) peak = std::max(peak, std::abs(v));
  CHECK(peak <= 1.0 + 1e-12);
}

TEST_CASE("coil maps: RSS = 1, smooth, deterministic") {
  const auto csm = make_coil_maps(4, 64, 64, 0);
  CHECK(csm.rss_error() < 1e-10);

  const auto again = make_coil_maps(4, 64, 64, 0);
  CHECK(csm.maps.data == again.maps.data);

  CHECK_THROWS_AS(make_coil_maps(1, 64, 64, 0), ValidationError);

  // Gradient energy far below white-noise maps of equal power.
  auto grad_energy = [](const MultiCoilImage& m) {
    double acc = 0.0;
    for (int k = 0; k < m.n_coils; ++k)
      for (int r = 0; r < m.height; ++r)
        for (int c = 0; c < m.width; ++c) {
          if (c + 1 < m.width) acc += std::norm(m.at(k, r, c + 1) - m.at(k, r, c));
          if (r + 1 < m.height) acc += std::norm(m.at(k, r + 1, c) - m.at(k, r, c));
        }
    return acc;
  };
  double power = 0.0;
  for (const auto& v : csm.maps.data) power += std::norm(v);
  RandomStream rng(55);
  MultiCoilImage noise(4, 64, 64);
  for (auto& v : noise.data) v = rng.complex_gaussian();
  double npower = 0.0;
  for (const auto& v : noise.data) npower += std::norm(v);
  const double scale = std::sqrt(power / npower);
  for (auto& v : noise.data) v *= scale;
  CHECK(grad_energy(noise) >= 10.0 * grad_energy(csm.maps));
}

TEST_CASE("simulate_kspace with full mask, no noise, uniform coil equals fft2c") {
  const auto x = make_phantom(32, 32, 0, PhantomKind::shepp_logan);
  MultiCoilImage maps(1, 32, 32);
  for (auto& v : maps.data) v = cxd(1.0, 0.0);
  CoilSensitivities csm{maps, BinaryMask(32, 32, 1)};
  const auto mask = make_mask(32, 32, 1.0, 0, MaskKind::equispaced, 0);
  RandomStream rng(0);
  const auto y = simulate_kspace(x, csm, mask, 0.0, rng);
  const auto k = fft2c(x);
  for (size_t p = 0; p < k.data.size(); ++p) CHECK(y.data.data[p] == k.data[p]);
}

TEST_CASE("simulate_kspace noise variance matches sigma^2") {
  ComplexImage x(64, 64);  // zero image -> pure noise
  const auto csm = make_coil_maps(4, 64, 64, 0);
  const auto mask = make_mask(64, 64, 1.0, 0, MaskKind::equispaced, 0);
  RandomStream rng(77);
  const double sigma = 0.05;
  const auto y = simulate_kspace(x, csm, mask, sigma, rng);
  double var = 0.0;
  for (const auto& v : y.data.data) var += std::norm(v);
  var /= double(y.data.data.size());
  CHECK(y.data.data.size() >= 10000);
  CHECK(std::abs(var - sigma * sigma) <= 0.05 * sigma * sigma);
}

TEST_CASE("simulate_kspace zeroes unsampled rows exactly") {
  const auto x = make_phantom(64, 64, 1, PhantomKind::smooth_random);
  const auto csm = make_coil_maps(4, 64, 64, 2);
  const auto mask = make_mask(64, 64, 4.0, 12, MaskKind::equispaced, 1);
  RandomStream rng(5);
  const auto y = simulate_kspace(x, csm, mask, 0.02, rng);
  CHECK_NOTHROW(y.validate());
}

TEST_CASE("training pair: masks share ACS, differ elsewhere, union grows") {
  const auto x = make_phantom(64, 64, 7, PhantomKind::smooth_random);
  const auto csm = make_coil_maps(4, 64, 64, 7);
  const auto pair = make_training_pair(x, csm, 4.0, 12, 0.01, 42);

  CHECK(pair.y.mask.acs_lines == pair.y_prime.mask.acs_lines);
  CHECK(pair.y.mask.selected_lines != pair.y_prime.mask.selected_lines);

  std::set<int> uni(pair.y.mask.selected_lines.begin(),
                    pair.y.mask.selected_lines.end());
  uni.insert(pair.y_prime.mask.selected_lines.begin(),
             pair.y_prime.mask.selected_lines.end());
  CHECK(uni.size() > pair.y.mask.selected_lines.size());

  // same seed reproduces everything
  const auto pair2 = make_training_pair(x, csm, 4.0, 12, 0.01, 42);
  CHECK(pair.y.data.data == pair2.y.data.data);
  CHECK(pair.y_prime.data.data == pair2.y_prime.data.data);
}

TEST_CASE("training pair noise draws are uncorrelated") {
  const auto x = make_phantom(128, 128, 3, PhantomKind::smooth_random);
  const auto csm = make_coil_maps(4, 128, 128, 3);
  const double sigma = 0.05;
  const auto pair = make_training_pair(x, csm, 4.0, 24, sigma, 99);

  auto clean = fft2c(coil_expand(x, csm));
  const auto f1 = pair.y.mask.row_flags();
  const auto f2 = pair.y_prime.mask.row_flags();
  cxd corr(0, 0);
  double e1 = 0.0, e2 = 0.0;
  size_t n = 0;
  for (int k = 0; k < 4; ++k)
    for (int r = 0; r < 128; ++r) {
      if (!f1[r] || !f2[r]) continue;
      for (int c = 0; c < 128; ++c) {
        const cxd n1 = pair.y.data.at(k, r, c) - clean.at(k, r, c);
        const cxd n2 = pair.y_prime.data.at(k, r, c) - clean.at(k, r, c);
        corr += n1 * std::conj(n2);
        e1 += std::norm(n1);
        e2 += std::norm(n2);
        ++n;
      }
    }
  CHECK(n >= 10000);
  CHECK(std::abs(corr) / std::sqrt(e1 * e2) < 0.02);
}

TEST_CASE("dataset save/load round trips bit-exactly") {
  std::vector<TrainingPair> pairs;
  const auto csm = make_coil_maps(2, 32, 32, 1);
  for (int i = 0; i < 3; ++i) {
    const auto x = make_phantom(32, 32, 10 + i, PhantomKind::smooth_random);
    pairs.push_back(make_training_pair(x, csm, 4.0, 8, 0.01, 100 + i));
  }
  const std::string path = "/tmp/spicer_test_roundtrip.spcr";
  DatasetMeta meta;
  meta.seed = 10;
  save_dataset(pairs, path, meta);

  DatasetMeta loaded_meta;
  const auto loaded = load_dataset(path, &loaded_meta);
  REQUIRE(loaded.size() == pairs.size());
  CHECK(loaded_meta.seed == 10);
  for (size_t i = 0; i < pairs.size(); ++i) {
    CHECK(loaded[i].y.data.data == pairs[i].y.data.data);
    CHECK(loaded[i].y_prime.data.data == pairs[i].y_prime.data.data);
    CHECK(loaded[i].y.mask.selected_lines == pairs[i].y.mask.selected_lines);
    CHECK(loaded[i].ground_truth().data == pairs[i].ground_truth().data);
    CHECK(loaded[i].true_csm().maps.data == pairs[i].true_csm().maps.data);
  }
  std::remove(path.c_str());
}

TEST_CASE("dataset loader flags corruption and version mismatch distinctly") {
  std::vector<TrainingPair> pairs;
  const auto csm = make_coil_maps(2, 32, 32, 1);
  const auto x = make_phantom(32, 32, 1, PhantomKind::smooth_random);
  pairs.push_back(make_training_pair(x, csm, 4.0, 8, 0.01, 7));
  const std::string path = "/tmp/spicer_test_corrupt.spcr";
  save_dataset(pairs, path);

  auto bytes = read_file(path);

  // truncation -> checksum error
  std::vector<std::uint8_t> cut(bytes.begin(), bytes.end() - 64);
  write_file_atomic(path, cut);
  CHECK_THROWS_AS((void)load_dataset(path), ChecksumError);

  // flipped payload byte -> checksum error
  auto flipped = bytes;
  flipped[flipped.size() / 2] ^= 0xFF;
  write_file_atomic(path, flipped);
  CHECK_THROWS_AS((void)load_dataset(path), ChecksumError);

  // unknown version -> version error
  auto versioned = bytes;
  versioned[4] = 0x7F;
  write_file_atomic(path, versioned);
  CHECK_THROWS_AS((void)load_dataset(path), VersionError);

  // bad magic -> plain IO error
  auto magicless = bytes;
  magicless[0] = 'X';
  write_file_atomic(path, magicless);
  CHECK_THROWS(load_dataset(path));

  std::remove(path.c_str());
}

TEST_CASE("c64 datasets load back as the quantized values") {
  std::vector<TrainingPair> pairs;
  const auto csm = make_coil_maps(2, 32, 32, 1);
  const auto x = make_phantom(32, 32, 4, PhantomKind::smooth_random);
  pairs.push_back(make_training_pair(x, csm, 4.0, 8, 0.01, 7));
  const std::string path = "/tmp/spicer_test_c64.spcr";
  DatasetMeta meta;
  meta.dtype = "c64";
  save_dataset(pairs, path, meta);
  const auto loaded = load_dataset(path);
  for (size_t p = 0; p < pairs[0].y.data.data.size(); ++p) {
    const cxd orig = pairs[0].y.data.data[p];
    const cxd got = loaded[0].y.data.data[p];
    CHECK(got.real() == double(float(orig.real())));
    CHECK(got.imag() == double(float(orig.imag())));
  }
  // second save/load is bit-stable
  save_dataset(loaded, path, meta);
  const auto again = load_dataset(path);
  CHECK(again[0].y.data.data == loaded[0].y.data.data);
  std::remove(path.c_str());
}

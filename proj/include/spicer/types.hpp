#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace spicer {

using cxd = std::complex<double>;

// Error taxonomy. Config/shape problems, file problems (with version and
// checksum told apart), and numeric blowups map to distinct CLI exit codes.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct VersionError : IoError {
  using IoError::IoError;
};
struct ChecksumError : IoError {
  using IoError::IoError;
};
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Single 2D complex-valued image, row-major (height rows x width cols).
struct ComplexImage {
  int height = 0;
  int width = 0;
  std::vector<cxd> data;

  ComplexImage() = default;
  ComplexImage(int h, int w) : height(h), width(w), data(size_t(h) * w) {
    if (h < 8 || w < 8)
      throw ValidationError("ComplexImage: minimum size is 8x8, got " +
                            std::to_string(h) + "x" + std::to_string(w));
  }

  size_t size() const { return data.size(); }
  cxd& at(int r, int c) { return data[size_t(r) * width + c]; }
  const cxd& at(int r, int c) const { return data[size_t(r) * width + c]; }

  bool same_shape(const ComplexImage& o) const {
    return height == o.height && width == o.width;
  }
};

// Stack of coil images sharing one grid.
struct MultiCoilImage {
  int n_coils = 0;
  int height = 0;
  int width = 0;
  std::vector<cxd> data;  // [coil][row][col]

  MultiCoilImage() = default;
  MultiCoilImage(int nc, int h, int w)
      : n_coils(nc), height(h), width(w), data(size_t(nc) * h * w) {
    if (nc < 1) throw ValidationError("MultiCoilImage: need at least 1 coil");
    if (h < 8 || w < 8)
      throw ValidationError("MultiCoilImage: minimum grid is 8x8");
  }

  size_t plane_size() const { return size_t(height) * width; }
  cxd* coil(int k) { return data.data() + size_t(k) * plane_size(); }
  const cxd* coil(int k) const { return data.data() + size_t(k) * plane_size(); }
  cxd& at(int k, int r, int c) { return data[(size_t(k) * height + r) * width + c]; }
  const cxd& at(int k, int r, int c) const {
    return data[(size_t(k) * height + r) * width + c];
  }

  bool same_shape(const MultiCoilImage& o) const {
    return n_coils == o.n_coils && height == o.height && width == o.width;
  }

  ComplexImage coil_image(int k) const {
    ComplexImage img(height, width);
    const cxd* p = coil(k);
    std::copy(p, p + plane_size(), img.data.begin());
    return img;
  }
};

// Real-valued image, used by metrics and for magnitude/PNG outputs.
struct RealImage {
  int height = 0;
  int width = 0;
  std::vector<double> data;

  RealImage() = default;
  RealImage(int h, int w) : height(h), width(w), data(size_t(h) * w, 0.0) {}

  double& at(int r, int c) { return data[size_t(r) * width + c]; }
  const double& at(int r, int c) const { return data[size_t(r) * width + c]; }
  bool same_shape(const RealImage& o) const {
    return height == o.height && width == o.width;
  }
};

// Binary mask on the pixel grid (1 inside, 0 outside).
struct BinaryMask {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> data;

  BinaryMask() = default;
  BinaryMask(int h, int w, std::uint8_t fill = 0)
      : height(h), width(w), data(size_t(h) * w, fill) {}

  std::uint8_t& at(int r, int c) { return data[size_t(r) * width + c]; }
  const std::uint8_t& at(int r, int c) const { return data[size_t(r) * width + c]; }
  size_t count() const {
    size_t n = 0;
    for (auto v : data) n += v ? 1 : 0;
    return n;
  }
};

RealImage magnitude(const ComplexImage& img);

void check_finite(const ComplexImage& img, const char* what);
void check_finite(const MultiCoilImage& img, const char* what);

}  // namespace spicer

#include "spicer/png_io.hpp"

#include <png.h>

#include <algorithm>
#include <cstdio>
#include <vector>

namespace spicer {

namespace {

void write_gray8(const std::vector<std::uint8_t>& pixels, int h, int w,
                 const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw IoError("cannot open " + path + " for writing");

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr,
                                            nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    if (png) png_destroy_write_struct(&png, &info);
    std::fclose(f);
    throw IoError("libpng initialization failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(f);
    throw IoError("libpng write failed for " + path);
  }
  png_init_io(png, f);
  png_set_IHDR(png, info, w, h, 8, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int r = 0; r < h; ++r)
    png_write_row(png, const_cast<png_bytep>(pixels.data() + size_t(r) * w));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(f);
}

}  // namespace

void write_png_grayscale(const RealImage& img, const std::string& path,
                         const BinaryMask* region) {
  double lo = 0.0, hi = 0.0;
  bool first = true;
  for (size_t p = 0; p < img.data.size(); ++p) {
    if (region && !region->data[p]) continue;
    if (first) {
      lo = hi = img.data[p];
      first = false;
    } else {
      lo = std::min(lo, img.data[p]);
      hi = std::max(hi, img.data[p]);
    }
  }
  const double span = hi > lo ? hi - lo : 1.0;
  std::vector<std::uint8_t> pixels(img.data.size(), 0);
  for (size_t p = 0; p < img.data.size(); ++p) {
    if (region && !region->data[p]) continue;
    const double v = std::clamp((img.data[p] - lo) / span, 0.0, 1.0);
    pixels[p] = std::uint8_t(std::lround(v * 255.0));
  }
  write_gray8(pixels, img.height, img.width, path);
}

void write_png_error_map(const RealImage& test, const RealImage& ref,
                         const std::string& path, double scale_frac,
                         const BinaryMask* region) {
  if (!test.same_shape(ref))
    throw ValidationError("write_png_error_map: shape mismatch");
  double peak = 0.0;
  for (size_t p = 0; p < ref.data.size(); ++p) {
    if (region && !region->data[p]) continue;
    peak = std::max(peak, ref.data[p]);
  }
  const double full = scale_frac * peak > 0.0 ? scale_frac * peak : 1.0;
  std::vector<std::uint8_t> pixels(ref.data.size(), 0);
  for (size_t p = 0; p < ref.data.size(); ++p) {
    if (region && !region->data[p]) continue;
    const double v = std::clamp(std::abs(test.data[p] - ref.data[p]) / full, 0.0, 1.0);
    pixels[p] = std::uint8_t(std::lround(v * 255.0));
  }
  write_gray8(pixels, ref.height, ref.width, path);
}

}  // namespace spicer

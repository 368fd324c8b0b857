#include "spicer/types.hpp"

#include <cmath>

namespace spicer {

RealImage magnitude(const ComplexImage& img) {
  RealImage out(img.height, img.width);
  for (size_t i = 0; i < img.data.size(); ++i) out.data[i] = std::abs(img.data[i]);
  return out;
}

void check_finite(const ComplexImage& img, const char* what) {
  for (const auto& v : img.data)
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
      throw NumericError(std::string(what) + ": non-finite value encountered");
}

void check_finite(const MultiCoilImage& img, const char* what) {
  for (const auto& v : img.data)
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
      throw NumericError(std::string(what) + ": non-finite value encountered");
}

}  // namespace spicer

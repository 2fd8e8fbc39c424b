#pragma once

#include <cmath>
#include <numbers>
#include <random>

#include "fba2d/spectral.hpp"
#include "fba2d/tensor.hpp"

namespace fba2d::testing {

inline ImageTensor random_image(Shape shape, std::mt19937_64 &rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ImageTensor img(shape);
  for (double &v : img.values()) v = u(rng);
  return img;
}

inline Spectrum random_spectrum(Shape shape, std::mt19937_64 &rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Spectrum s(shape);
  for (double &v : s.values()) v = n(rng);
  return s;
}

// Direct quadruple-sum orthonormal DCT-II, independent of the library's basis cache.
inline Spectrum naive_dct2(const ImageTensor &img) {
  const std::size_t H = img.height(), W = img.width();
  Spectrum out(img.shape());
  for (std::size_t c = 0; c < img.channels(); ++c)
    for (std::size_t u = 0; u < H; ++u)
      for (std::size_t v = 0; v < W; ++v) {
        const double au = u == 0 ? std::sqrt(1.0 / H) : std::sqrt(2.0 / H);
        const double av = v == 0 ? std::sqrt(1.0 / W) : std::sqrt(2.0 / W);
        double s = 0.0;
        for (std::size_t i = 0; i < H; ++i)
          for (std::size_t j = 0; j < W; ++j)
            s += img.at(c, i, j) * std::cos(std::numbers::pi * (2.0 * i + 1.0) * u / (2.0 * H)) *
                 std::cos(std::numbers::pi * (2.0 * j + 1.0) * v / (2.0 * W));
        out.at(c, u, v) = au * av * s;
      }
  return out;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
  return m;
}

} // namespace fba2d::testing

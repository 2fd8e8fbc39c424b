#include "fba2d/tensor.hpp"

#include <algorithm>
#include <cmath>

namespace fba2d {

std::string to_string(const Shape &s) {
  return std::to_string(s.height) + "x" + std::to_string(s.width) + "x" +
         std::to_string(s.channels);
}

void validate_shape(const Shape &s) {
  if (s.height == 0 || s.width == 0)
    throw std::invalid_argument("image dimensions must be positive, got " + to_string(s));
  if (s.channels != 1 && s.channels != 3)
    throw std::invalid_argument("image must have 1 or 3 channels, got " + to_string(s));
}

void validate_image(const ImageTensor &img) {
  validate_shape(img.shape());
  for (double v : img.values())
    if (!std::isfinite(v) || v < 0.0 || v > 1.0)
      throw std::invalid_argument("pixel value outside [0,1]: " + std::to_string(v));
}

ImageTensor clamp01(ImageTensor img) {
  for (double &v : img.values()) v = std::clamp(v, 0.0, 1.0);
  return img;
}

ImageTensor quantize8(ImageTensor img) {
  // std::round rounds halves away from zero.
  for (double &v : img.values()) v = std::round(std::clamp(v, 0.0, 1.0) * 255.0) / 255.0;
  return img;
}

namespace {
template <class Tag> void require_same(const Grid<Tag> &a, const Grid<Tag> &b) {
  if (a.shape() != b.shape())
    throw std::invalid_argument("shape mismatch: " + to_string(a.shape()) + " vs " +
                                to_string(b.shape()));
}
} // namespace

template <class Tag> double dot(const Grid<Tag> &a, const Grid<Tag> &b) {
  require_same(a, b);
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

template <class Tag> double norm2(const Grid<Tag> &a) {
  double s = 0.0;
  for (double v : a.values()) s += v * v;
  return std::sqrt(s);
}

template <class Tag> Grid<Tag> operator-(const Grid<Tag> &a, const Grid<Tag> &b) {
  require_same(a, b);
  Grid<Tag> out(a.shape());
  for (std::size_t k = 0; k < a.size(); ++k) out[k] = a[k] - b[k];
  return out;
}

template <class Tag> Grid<Tag> operator+(const Grid<Tag> &a, const Grid<Tag> &b) {
  require_same(a, b);
  Grid<Tag> out(a.shape());
  for (std::size_t k = 0; k < a.size(); ++k) out[k] = a[k] + b[k];
  return out;
}

template <class Tag> Grid<Tag> operator*(double s, const Grid<Tag> &a) {
  Grid<Tag> out(a.shape());
  for (std::size_t k = 0; k < a.size(); ++k) out[k] = s * a[k];
  return out;
}

template <class Tag> void axpy(Grid<Tag> &a, double s, const Grid<Tag> &b) {
  require_same(a, b);
  for (std::size_t k = 0; k < a.size(); ++k) a[k] += s * b[k];
}

#define FBA2D_INSTANTIATE(Tag)                                                                \
  template double dot(const Grid<Tag> &, const Grid<Tag> &);                                  \
  template double norm2(const Grid<Tag> &);                                                   \
  template Grid<Tag> operator-(const Grid<Tag> &, const Grid<Tag> &);                         \
  template Grid<Tag> operator+(const Grid<Tag> &, const Grid<Tag> &);                         \
  template Grid<Tag> operator*(double, const Grid<Tag> &);                                    \
  template void axpy(Grid<Tag> &, double, const Grid<Tag> &);

FBA2D_INSTANTIATE(ImageTag)
FBA2D_INSTANTIATE(SpectrumTag)

#undef FBA2D_INSTANTIATE

} // namespace fba2d

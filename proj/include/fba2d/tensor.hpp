#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace fba2d {

/// Hard label produced by a detector. 0 = real, 1 = fake.
enum class Label : std::uint8_t { Real = 0, Fake = 1 };

inline Label opposite(Label l) { return l == Label::Real ? Label::Fake : Label::Real; }

inline const char *to_string(Label l) { return l == Label::Real ? "real" : "fake"; }

struct Shape {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 0;

  std::size_t plane() const { return height * width; }
  std::size_t size() const { return height * width * channels; }
  bool operator==(const Shape &) const = default;
};

std::string to_string(const Shape &s);

struct ImageTag {};
struct SpectrumTag {};

/// Planar H x W x C grid of doubles: element (c, i, j) lives at c*H*W + i*W + j.
/// The tag keeps spatial images and DCT spectra from being mixed up.
template <class Tag> class Grid {
public:
  Grid() = default;
  explicit Grid(Shape shape, double fill = 0.0) : shape_(shape), data_(shape.size(), fill) {}
  Grid(Shape shape, std::vector<double> data) : shape_(shape), data_(std::move(data)) {
    if (data_.size() != shape_.size())
      throw std::invalid_argument("grid data size " + std::to_string(data_.size()) +
                                  " does not match shape " + to_string(shape_));
  }

  const Shape &shape() const { return shape_; }
  std::size_t height() const { return shape_.height; }
  std::size_t width() const { return shape_.width; }
  std::size_t channels() const { return shape_.channels; }
  std::size_t size() const { return data_.size(); }

  double &at(std::size_t c, std::size_t i, std::size_t j) {
    return data_[c * shape_.plane() + i * shape_.width + j];
  }
  double at(std::size_t c, std::size_t i, std::size_t j) const {
    return data_[c * shape_.plane() + i * shape_.width + j];
  }
  double &operator[](std::size_t k) { return data_[k]; }
  double operator[](std::size_t k) const { return data_[k]; }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  std::span<double> channel(std::size_t c) {
    return std::span<double>(data_).subspan(c * shape_.plane(), shape_.plane());
  }
  std::span<const double> channel(std::size_t c) const {
    return std::span<const double>(data_).subspan(c * shape_.plane(), shape_.plane());
  }

  bool operator==(const Grid &) const = default;

private:
  Shape shape_{};
  std::vector<double> data_;
};

using ImageTensor = Grid<ImageTag>;
using Spectrum = Grid<SpectrumTag>;

/// Throws std::invalid_argument unless 1 or 3 channels and H, W >= 1.
void validate_shape(const Shape &s);

/// Throws std::invalid_argument if any pixel falls outside [0,1] or is not finite.
void validate_image(const ImageTensor &img);

/// Element-wise clamp into [0,1].
ImageTensor clamp01(ImageTensor img);

/// round(p*255)/255 with halves rounded away from zero, after clamping to [0,1].
ImageTensor quantize8(ImageTensor img);

// Vector algebra over the flattened element sequence.
template <class Tag> double dot(const Grid<Tag> &a, const Grid<Tag> &b);
template <class Tag> double norm2(const Grid<Tag> &a);
template <class Tag> Grid<Tag> operator-(const Grid<Tag> &a, const Grid<Tag> &b);
template <class Tag> Grid<Tag> operator+(const Grid<Tag> &a, const Grid<Tag> &b);
template <class Tag> Grid<Tag> operator*(double s, const Grid<Tag> &a);

/// a + s * b, in place on a.
template <class Tag> void axpy(Grid<Tag> &a, double s, const Grid<Tag> &b);

} // namespace fba2d

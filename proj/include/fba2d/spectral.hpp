#pragma once

#include <cstddef>
#include <random>
#include <utility>
#include <vector>

#include "fba2d/tensor.hpp"

namespace fba2d {

/// Orthonormal 2-D DCT-II applied independently to every channel.
Spectrum dct2(const ImageTensor &img);

/// Inverse of dct2 (orthonormal DCT-III). The result is not clamped.
ImageTensor idct2(const Spectrum &spec);

/// Boolean selector over (row, col) coefficient positions, shared by all channels.
///
/// The low band is the anti-diagonal wedge nearest the DC corner (smallest i+j,
/// ties to smaller i); the high band is the wedge farthest from it (largest i+j,
/// ties to larger i). Band sizes are ceil(fraction * H * W).
class FrequencyMask {
public:
  FrequencyMask() = default;

  static FrequencyMask bands(std::size_t height, std::size_t width, double low_fraction,
                             double high_fraction);
  static FrequencyMask full(std::size_t height, std::size_t width);
  /// Explicit selection, mostly for tests. Positions are (row, col).
  static FrequencyMask from_positions(std::size_t height, std::size_t width,
                                      const std::vector<std::pair<std::size_t, std::size_t>> &pos);

  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  double low_fraction() const { return low_fraction_; }
  double high_fraction() const { return high_fraction_; }

  bool selected(std::size_t i, std::size_t j) const { return selected_[i * width_ + j] != 0; }
  bool in_low_band(std::size_t i, std::size_t j) const { return band_[i * width_ + j] == 1; }
  bool in_high_band(std::size_t i, std::size_t j) const { return band_[i * width_ + j] == 2; }

  std::size_t count() const { return positions_.size(); }
  bool empty() const { return positions_.empty(); }
  /// Flat in-plane indices (i*W + j) of the selected positions, row-major scan order.
  const std::vector<std::size_t> &positions() const { return positions_; }

  bool operator==(const FrequencyMask &) const = default;

private:
  std::size_t height_ = 0, width_ = 0;
  double low_fraction_ = 0.0, high_fraction_ = 0.0;
  std::vector<std::uint8_t> selected_;
  std::vector<std::uint8_t> band_; // 0 none, 1 low, 2 high
  std::vector<std::size_t> positions_;

  void finalize();
};

inline FrequencyMask build_mask(std::size_t height, std::size_t width, double low_fraction,
                                double high_fraction) {
  return FrequencyMask::bands(height, width, low_fraction, high_fraction);
}

/// Random unit-L2 spectrum: i.i.d. standard normal on the selected positions of
/// every channel (drawn channel by channel in scan order), exactly zero elsewhere.
Spectrum sample_masked_direction(const FrequencyMask &mask, std::size_t channels,
                                 std::mt19937_64 &rng);

} // namespace fba2d

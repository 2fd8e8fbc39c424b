#include "fba2d/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <stdexcept>
#include <string>

namespace fba2d {

namespace {

// Orthonormal DCT-II matrix, row k = frequency: B[k][n] = s_k cos(pi (2n+1) k / 2N).
const std::vector<double> &dct_basis(std::size_t n) {
  thread_local std::map<std::size_t, std::vector<double>> cache;
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  std::vector<double> b(n * n);
  const double dn = static_cast<double>(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double s = k == 0 ? std::sqrt(1.0 / dn) : std::sqrt(2.0 / dn);
    for (std::size_t i = 0; i < n; ++i)
      b[k * n + i] =
          s * std::cos(std::numbers::pi * (2.0 * static_cast<double>(i) + 1.0) *
                       static_cast<double>(k) / (2.0 * dn));
  }
  return cache.emplace(n, std::move(b)).first->second;
}

// out = L * in * R^T for one h x w plane, where L is h x h and R is w x w.
// With transpose set, uses L^T and R (the inverse for orthonormal bases).
void separable(std::span<const double> in, std::span<double> out, std::size_t h, std::size_t w,
               const std::vector<double> &lb, const std::vector<double> &rb, bool transpose) {
  std::vector<double> tmp(h * w, 0.0);
  // rows: tmp[i][k] = sum_j in[i][j] * R'[k][j]
  for (std::size_t i = 0; i < h; ++i)
    for (std::size_t k = 0; k < w; ++k) {
      double s = 0.0;
      for (std::size_t j = 0; j < w; ++j)
        s += in[i * w + j] * (transpose ? rb[j * w + k] : rb[k * w + j]);
      tmp[i * w + k] = s;
    }
  // columns: out[k][j] = sum_i L'[k][i] * tmp[i][j]
  for (std::size_t k = 0; k < h; ++k)
    for (std::size_t j = 0; j < w; ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < h; ++i)
        s += (transpose ? lb[i * h + k] : lb[k * h + i]) * tmp[i * w + j];
      out[k * w + j] = s;
    }
}

template <class Out, class In> Out transform(const In &in, bool inverse) {
  validate_shape(in.shape());
  const auto h = in.height(), w = in.width();
  const auto &lb = dct_basis(h);
  const auto &rb = dct_basis(w);
  Out out(in.shape());
  for (std::size_t c = 0; c < in.channels(); ++c)
    separable(in.channel(c), out.channel(c), h, w, lb, rb, inverse);
  return out;
}

std::size_t band_count(double fraction, std::size_t total) {
  // Tolerance absorbs representation error such as 0.2 * 100 = 20.000000000000004.
  const double want = fraction * static_cast<double>(total);
  return std::min(total, static_cast<std::size_t>(std::ceil(want - 1e-9)));
}

} // namespace

Spectrum dct2(const ImageTensor &img) { return transform<Spectrum>(img, false); }

ImageTensor idct2(const Spectrum &spec) { return transform<ImageTensor>(spec, true); }

FrequencyMask FrequencyMask::bands(std::size_t height, std::size_t width, double low_fraction,
                                   double high_fraction) {
  if (height == 0 || width == 0) throw std::invalid_argument("mask shape must be positive");
  auto valid = [](double f) { return std::isfinite(f) && f >= 0.0 && f <= 1.0; };
  if (!valid(low_fraction) || !valid(high_fraction))
    throw std::invalid_argument("band fractions must lie in [0,1]");
  if (low_fraction + high_fraction > 1.0 + 1e-12)
    throw std::invalid_argument("band fractions sum to " +
                                std::to_string(low_fraction + high_fraction) + " > 1");

  FrequencyMask m;
  m.height_ = height;
  m.width_ = width;
  m.low_fraction_ = low_fraction;
  m.high_fraction_ = high_fraction;
  const std::size_t total = height * width;
  m.selected_.assign(total, 0);
  m.band_.assign(total, 0);

  std::vector<std::size_t> order(total);
  for (std::size_t k = 0; k < total; ++k) order[k] = k;
  auto key = [width](std::size_t k) { return std::pair{k / width + k % width, k / width}; };
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return key(a) < key(b); });

  const std::size_t n_low = band_count(low_fraction, total);
  for (std::size_t r = 0; r < n_low; ++r) m.band_[order[r]] = 1;
  // High band walks the same ordering backwards, which gives larger i+j first and
  // larger i first among ties; it can only take what the low band left.
  std::size_t n_high = band_count(high_fraction, total);
  for (std::size_t r = total; r-- > 0 && n_high > 0;) {
    if (m.band_[order[r]] != 0) break;
    m.band_[order[r]] = 2;
    --n_high;
  }
  for (std::size_t k = 0; k < total; ++k) m.selected_[k] = m.band_[k] != 0;
  m.finalize();
  return m;
}

FrequencyMask FrequencyMask::full(std::size_t height, std::size_t width) {
  return bands(height, width, 1.0, 0.0);
}

FrequencyMask
FrequencyMask::from_positions(std::size_t height, std::size_t width,
                              const std::vector<std::pair<std::size_t, std::size_t>> &pos) {
  FrequencyMask m;
  m.height_ = height;
  m.width_ = width;
  m.selected_.assign(height * width, 0);
  m.band_.assign(height * width, 0);
  for (auto [i, j] : pos) {
    if (i >= height || j >= width) throw std::out_of_range("mask position out of range");
    m.selected_[i * width + j] = 1;
  }
  m.finalize();
  m.low_fraction_ = static_cast<double>(m.count()) / static_cast<double>(height * width);
  return m;
}

void FrequencyMask::finalize() {
  positions_.clear();
  for (std::size_t k = 0; k < selected_.size(); ++k)
    if (selected_[k]) positions_.push_back(k);
}

Spectrum sample_masked_direction(const FrequencyMask &mask, std::size_t channels,
                                 std::mt19937_64 &rng) {
  if (mask.empty()) throw std::invalid_argument("cannot sample a direction from an empty mask");
  Spectrum v(Shape{mask.height(), mask.width(), channels});
  std::normal_distribution<double> normal(0.0, 1.0);
  double ss = 0.0;
  do {
    ss = 0.0;
    for (std::size_t c = 0; c < channels; ++c) {
      auto plane = v.channel(c);
      for (std::size_t k : mask.positions()) {
        plane[k] = normal(rng);
        ss += plane[k] * plane[k];
      }
    }
  } while (ss == 0.0);
  const double inv = 1.0 / std::sqrt(ss);
  for (double &x : v.values()) x *= inv;
  return v;
}

} // namespace fba2d

#include "fba2d/oracle.hpp"

#include <cmath>

namespace fba2d {

HalfspaceOracle::HalfspaceOracle(Spectrum weight, double bias)
    : weight_(std::move(weight)), bias_(bias), weight_norm_(norm2(weight_)) {
  if (!(weight_norm_ > 0.0) || !std::isfinite(weight_norm_))
    throw std::invalid_argument("halfspace weight must be non-zero and finite");
  if (!std::isfinite(bias_)) throw std::invalid_argument("halfspace bias must be finite");
}

double HalfspaceOracle::score(const ImageTensor &img) const {
  return dot(weight_, dct2(img)) + bias_;
}

double HalfspaceOracle::distance_to_boundary(const ImageTensor &img) const {
  // Parseval: the orthonormal DCT is an isometry, so the spectral distance is the pixel distance.
  return std::abs(score(img)) / weight_norm_;
}

Label HalfspaceOracle::classify(const ImageTensor &img) {
  return score(img) >= 0.0 ? Label::Fake : Label::Real;
}

FreqEnergyOracle::FreqEnergyOracle(FrequencyMask high_mask, double threshold)
    : mask_(std::move(high_mask)), threshold_(threshold) {
  if (mask_.empty()) throw std::invalid_argument("energy oracle mask must be non-empty");
  if (!(threshold_ > 0.0 && threshold_ < 1.0))
    throw std::invalid_argument("energy oracle threshold must lie in (0,1)");
}

double FreqEnergyOracle::energy_fraction(const ImageTensor &img) const {
  if (img.height() != mask_.height() || img.width() != mask_.width())
    throw std::invalid_argument("image " + to_string(img.shape()) + " does not match mask");
  const Spectrum s = dct2(img);
  double masked = 0.0, ac = 0.0, dc = 0.0;
  for (std::size_t c = 0; c < s.channels(); ++c) {
    auto plane = s.channel(c);
    dc += plane[0] * plane[0];
    for (std::size_t k = 1; k < plane.size(); ++k) ac += plane[k] * plane[k];
    for (std::size_t k : mask_.positions())
      if (k != 0) masked += plane[k] * plane[k];
  }
  // A constant image leaves ~1e-30 of rounding residue in the AC terms.
  return ac > 1e-20 * (ac + dc) ? masked / ac : 0.0;
}

Label FreqEnergyOracle::classify(const ImageTensor &img) {
  return energy_fraction(img) >= threshold_ ? Label::Real : Label::Fake;
}

std::unique_ptr<FreqEnergyOracle> make_default_freq_energy_oracle(std::size_t height,
                                                                   std::size_t width) {
  return std::make_unique<FreqEnergyOracle>(
      FrequencyMask::bands(height, width, 0.0, FreqEnergyDefaults::high_fraction),
      FreqEnergyDefaults::threshold);
}

} // namespace fba2d

#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "fba2d/tensor.hpp"

namespace fba2d {

/// RMSE success thresholds on the [0,1] pixel scale, loosest first.
inline const std::vector<double> kDefaultThresholds{0.1, 0.05, 0.01};

double l2_distance(const ImageTensor &a, const ImageTensor &b);

/// sqrt(mean((a-b)^2)) over every element.
double rmse(const ImageTensor &a, const ImageTensor &b);

/// 10 log10(1 / MSE) with peak 1.0; +infinity for identical images.
double psnr(const ImageTensor &a, const ImageTensor &b);

/// Mean SSIM over non-overlapping 8x8 windows (partial edge windows are
/// dropped), computed per channel with population statistics and averaged.
/// C1 = 0.01^2, C2 = 0.03^2. Throws if either side is smaller than 8.
double ssim(const ImageTensor &a, const ImageTensor &b);

struct SampleMetrics {
  std::string id;
  double rmse = 0.0;
  double l2 = 0.0;
  double psnr = std::numeric_limits<double>::infinity();
  double ssim = 1.0;
  std::uint64_t queries = 0;          // total oracle calls for this sample
  bool adversarial = false;           // final image confirmed adversarial
  std::map<double, bool> success_at;  // final rmse <= threshold and adversarial
  /// Queries spent when the walk first reached rmse <= threshold (successes only).
  std::map<double, std::uint64_t> queries_at;
};

/// Fills rmse/l2/psnr/ssim and success_at from the final images.
SampleMetrics measure(const ImageTensor &original, const ImageTensor &adversarial,
                      bool adversarial_confirmed, std::uint64_t queries,
                      std::span<const double> thresholds = kDefaultThresholds);

struct ThresholdSummary {
  double threshold = 0.0;
  double asr = 0.0;
  double mean_queries = 0.0;   // over samples successful at this threshold; NaN if none
  double median_queries = 0.0; // likewise
  double mean_l2 = 0.0;        // final L2 over successful samples; NaN if none
};

struct BenchmarkSummary {
  std::size_t samples = 0;
  std::vector<ThresholdSummary> rows; // thresholds in descending order

  void write_csv(std::ostream &os) const;
  void write_json(std::ostream &os) const;
};

/// ASR and query statistics per threshold. Thresholds are taken from the
/// reports' success_at keys. Throws on empty input.
BenchmarkSummary aggregate(std::span<const SampleMetrics> reports);

double median(std::vector<double> values);

} // namespace fba2d

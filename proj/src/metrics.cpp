#include "fba2d/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

namespace fba2d {

namespace {

void require_same_shape(const ImageTensor &a, const ImageTensor &b) {
  if (a.shape() != b.shape())
    throw std::invalid_argument("metric shape mismatch: " + to_string(a.shape()) + " vs " +
                                to_string(b.shape()));
}

double mse(const ImageTensor &a, const ImageTensor &b) {
  require_same_shape(a, b);
  if (a.size() == 0) throw std::invalid_argument("metric on an empty image");
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
  return s / static_cast<double>(a.size());
}

constexpr std::size_t kWindow = 8;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

double nan() { return std::numeric_limits<double>::quiet_NaN(); }

} // namespace

double l2_distance(const ImageTensor &a, const ImageTensor &b) {
  require_same_shape(a, b);
  return norm2(a - b);
}

double rmse(const ImageTensor &a, const ImageTensor &b) { return std::sqrt(mse(a, b)); }

double psnr(const ImageTensor &a, const ImageTensor &b) {
  const double m = mse(a, b);
  if (m == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / m);
}

double ssim(const ImageTensor &a, const ImageTensor &b) {
  require_same_shape(a, b);
  if (a.height() < kWindow || a.width() < kWindow)
    throw std::invalid_argument("ssim needs images of at least 8x8, got " + to_string(a.shape()));
  const std::size_t wy = a.height() / kWindow, wx = a.width() / kWindow;
  constexpr double n = kWindow * kWindow;
  double total = 0.0;
  for (std::size_t c = 0; c < a.channels(); ++c) {
    double channel_sum = 0.0;
    for (std::size_t by = 0; by < wy; ++by)
      for (std::size_t bx = 0; bx < wx; ++bx) {
        double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
        for (std::size_t i = by * kWindow; i < (by + 1) * kWindow; ++i)
          for (std::size_t j = bx * kWindow; j < (bx + 1) * kWindow; ++j) {
            const double va = a.at(c, i, j), vb = b.at(c, i, j);
            sa += va;
            sb += vb;
            saa += va * va;
            sbb += vb * vb;
            sab += va * vb;
          }
        const double ma = sa / n, mb = sb / n;
        const double var_a = saa / n - ma * ma;
        const double var_b = sbb / n - mb * mb;
        const double cov = sab / n - ma * mb;
        channel_sum += ((2 * ma * mb + kC1) * (2 * cov + kC2)) /
                       ((ma * ma + mb * mb + kC1) * (var_a + var_b + kC2));
      }
    total += channel_sum / static_cast<double>(wy * wx);
  }
  return total / static_cast<double>(a.channels());
}

SampleMetrics measure(const ImageTensor &original, const ImageTensor &adversarial,
                      bool adversarial_confirmed, std::uint64_t queries,
                      std::span<const double> thresholds) {
  SampleMetrics m;
  m.l2 = l2_distance(original, adversarial);
  m.rmse = m.l2 / std::sqrt(static_cast<double>(original.size()));
  m.psnr = psnr(original, adversarial);
  m.ssim = ssim(original, adversarial);
  m.queries = queries;
  m.adversarial = adversarial_confirmed;
  for (double t : thresholds) {
    const bool ok = adversarial_confirmed && m.rmse <= t;
    m.success_at[t] = ok;
    if (ok) m.queries_at[t] = queries;
  }
  return m;
}

double median(std::vector<double> values) {
  if (values.empty()) return nan();
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

BenchmarkSummary aggregate(std::span<const SampleMetrics> reports) {
  if (reports.empty()) throw std::invalid_argument("cannot aggregate zero reports");
  std::vector<double> thresholds;
  for (const auto &r : reports)
    for (const auto &[t, ok] : r.success_at)
      if (std::find(thresholds.begin(), thresholds.end(), t) == thresholds.end())
        thresholds.push_back(t);
  std::sort(thresholds.begin(), thresholds.end(), std::greater<>());

  BenchmarkSummary s;
  s.samples = reports.size();
  for (double t : thresholds) {
    ThresholdSummary row;
    row.threshold = t;
    std::vector<double> queries;
    double l2_sum = 0.0;
    for (const auto &r : reports) {
      auto it = r.success_at.find(t);
      if (it == r.success_at.end() || !it->second) continue;
      auto q = r.queries_at.find(t);
      queries.push_back(static_cast<double>(q != r.queries_at.end() ? q->second : r.queries));
      l2_sum += r.l2;
    }
    const double wins = static_cast<double>(queries.size());
    row.asr = wins / static_cast<double>(reports.size());
    if (queries.empty()) {
      row.mean_queries = row.median_queries = row.mean_l2 = nan();
    } else {
      double qsum = 0.0;
      for (double q : queries) qsum += q;
      row.mean_queries = qsum / wins;
      row.median_queries = median(queries);
      row.mean_l2 = l2_sum / wins;
    }
    s.rows.push_back(row);
  }
  return s;
}

void BenchmarkSummary::write_csv(std::ostream &os) const {
  os << "threshold,asr,mean_queries,median_queries,mean_l2\n";
  for (const auto &r : rows)
    os << fmt::format("{},{},{},{},{}\n", r.threshold, r.asr, r.mean_queries, r.median_queries,
                      r.mean_l2);
}

void BenchmarkSummary::write_json(std::ostream &os) const {
  auto num = [](double v) -> nlohmann::ordered_json {
    if (std::isnan(v)) return nullptr;
    return v;
  };
  nlohmann::ordered_json j;
  j["samples"] = samples;
  j["rows"] = nlohmann::ordered_json::array();
  for (const auto &r : rows)
    j["rows"].push_back({{"threshold", r.threshold},
                         {"asr", r.asr},
                         {"mean_queries", num(r.mean_queries)},
                         {"median_queries", num(r.median_queries)},
                         {"mean_l2", num(r.mean_l2)}});
  os << j.dump(2) << '\n';
}

} // namespace fba2d

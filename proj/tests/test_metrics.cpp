#include <cmath>
#include <limits>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "fba2d/metrics.hpp"
#include "support.hpp"

using namespace fba2d;
using fba2d::testing::random_image;

namespace {

// Second SSIM implementation: explicit window copies and textbook formula.
double reference_ssim(const ImageTensor &a, const ImageTensor &b) {
  const double c1 = 0.0001, c2 = 0.0009;
  double total = 0.0;
  std::size_t windows = 0;
  for (std::size_t c = 0; c < a.channels(); ++c) {
    double chan = 0.0;
    std::size_t n_chan = 0;
    for (std::size_t i0 = 0; i0 + 8 <= a.height(); i0 += 8)
      for (std::size_t j0 = 0; j0 + 8 <= a.width(); j0 += 8) {
        std::vector<double> wa, wb;
        for (std::size_t i = i0; i < i0 + 8; ++i)
          for (std::size_t j = j0; j < j0 + 8; ++j) {
            wa.push_back(a.at(c, i, j));
            wb.push_back(b.at(c, i, j));
          }
        const double n = 64.0;
        double ma = 0, mb = 0;
        for (int k = 0; k < 64; ++k) ma += wa[k] / n, mb += wb[k] / n;
        double va = 0, vb = 0, cov = 0;
        for (int k = 0; k < 64; ++k) {
          va += (wa[k] - ma) * (wa[k] - ma) / n;
          vb += (wb[k] - mb) * (wb[k] - mb) / n;
          cov += (wa[k] - ma) * (wb[k] - mb) / n;
        }
        chan += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
        ++n_chan;
      }
    total += chan / static_cast<double>(n_chan);
    ++windows;
  }
  return total / static_cast<double>(windows);
}

SampleMetrics report(double rmse_v, std::uint64_t queries, std::map<double, std::uint64_t> at) {
  SampleMetrics m;
  m.rmse = rmse_v;
  m.l2 = rmse_v * 32.0;
  m.queries = queries;
  m.adversarial = true;
  for (double t : kDefaultThresholds) m.success_at[t] = rmse_v <= t;
  m.queries_at = std::move(at);
  return m;
}

} // namespace

TEST(Rmse, Examples) {
  const Shape s{4, 5, 3};
  const ImageTensor zeros(s), ones(s, 1.0);
  EXPECT_EQ(rmse(zeros, zeros), 0.0);
  EXPECT_DOUBLE_EQ(rmse(zeros, ones), 1.0);
  ImageTensor shifted(s, 0.3), base(s, 0.2);
  EXPECT_NEAR(rmse(shifted, base), 0.1, 1e-12);
  EXPECT_THROW(rmse(zeros, ImageTensor(Shape{4, 4, 3})), std::invalid_argument);
}

TEST(Rmse, IsScaledL2AndObeysTriangleInequality) {
  std::mt19937_64 rng(1);
  const Shape s{8, 8, 3};
  for (int n = 0; n < 200; ++n) {
    const ImageTensor a = random_image(s, rng), b = random_image(s, rng), c = random_image(s, rng);
    EXPECT_NEAR(rmse(a, b), l2_distance(a, b) / std::sqrt(192.0), 1e-14);
    EXPECT_LE(rmse(a, c), rmse(a, b) + rmse(b, c) + 1e-14);
  }
}

TEST(Psnr, Examples) {
  const Shape s{4, 4, 1};
  const ImageTensor a(s, 0.5);
  EXPECT_EQ(psnr(a, a), std::numeric_limits<double>::infinity());
  EXPECT_NEAR(psnr(ImageTensor(s, 0.6), a), 20.0, 1e-9); // MSE 0.01
  EXPECT_NEAR(psnr(ImageTensor(s, 0.0), ImageTensor(s, 1.0)), 0.0, 1e-12);
}

TEST(Ssim, IdenticalAndInverted) {
  std::mt19937_64 rng(2);
  const ImageTensor a = random_image(Shape{16, 16, 3}, rng);
  EXPECT_NEAR(ssim(a, a), 1.0, 1e-12);
  ImageTensor inv = a;
  for (double &v : inv.values()) v = 1.0 - v;
  EXPECT_LT(ssim(a, inv), 1.0);
  EXPECT_THROW(ssim(ImageTensor(Shape{7, 16, 1}), ImageTensor(Shape{7, 16, 1})),
               std::invalid_argument);
}

TEST(Ssim, MatchesReferenceAndIsSymmetric) {
  std::mt19937_64 rng(3);
  for (Shape s : {Shape{16, 16, 1}, Shape{20, 27, 3}, Shape{8, 8, 1}}) {
    for (int n = 0; n < 10; ++n) {
      const ImageTensor a = random_image(s, rng);
      ImageTensor b = a;
      std::normal_distribution<double> noise(0.0, 0.1 * (n + 1));
      for (double &v : b.values()) v = std::clamp(v + noise(rng), 0.0, 1.0);
      EXPECT_NEAR(ssim(a, b), reference_ssim(a, b), 1e-9);
      EXPECT_NEAR(ssim(a, b), ssim(b, a), 1e-15);
      EXPECT_NEAR(psnr(a, b), psnr(b, a), 1e-12);
    }
  }
}

TEST(Measure, ThresholdMonotonicity) {
  std::mt19937_64 rng(4);
  const Shape s{8, 8, 1};
  for (int n = 0; n < 100; ++n) {
    const ImageTensor a = random_image(s, rng);
    ImageTensor b = a;
    std::normal_distribution<double> noise(0.0, 0.002 * n);
    for (double &v : b.values()) v = std::clamp(v + noise(rng), 0.0, 1.0);
    const auto m = measure(a, b, true, 10);
    EXPECT_TRUE(!m.success_at.at(0.01) || m.success_at.at(0.05));
    EXPECT_TRUE(!m.success_at.at(0.05) || m.success_at.at(0.1));
    EXPECT_NEAR(m.rmse, m.l2 / 8.0, 1e-15);
    const auto failed = measure(a, b, false, 10);
    for (const auto &[t, ok] : failed.success_at) EXPECT_FALSE(ok);
  }
}

TEST(Aggregate, SingleSuccessEverywhere) {
  const auto s = aggregate(std::vector<SampleMetrics>{report(0.001, 40, {{0.1, 3}, {0.05, 5}, {0.01, 40}})});
  ASSERT_EQ(s.rows.size(), 3u);
  for (const auto &r : s.rows) EXPECT_EQ(r.asr, 1.0);
  EXPECT_EQ(s.rows[0].threshold, 0.1);
  EXPECT_EQ(s.rows[2].threshold, 0.01);
  EXPECT_EQ(s.rows[2].mean_queries, 40.0);
}

TEST(Aggregate, OneOfTwoAtLoosest) {
  const std::vector<SampleMetrics> r{report(0.07, 500, {{0.1, 12}}), report(0.3, 500, {})};
  const auto s = aggregate(r);
  EXPECT_EQ(s.rows[0].asr, 0.5);
  EXPECT_EQ(s.rows[1].asr, 0.0);
  EXPECT_EQ(s.rows[0].median_queries, 12.0);
  EXPECT_TRUE(std::isnan(s.rows[1].mean_queries));
  EXPECT_NEAR(s.rows[0].mean_l2, 0.07 * 32.0, 1e-12);
}

TEST(Aggregate, HandRecomputedStatistics) {
  // Queries to 0.1 for ten samples; the last two never got there.
  const std::vector<std::uint64_t> q{4, 9, 1, 30, 12, 7, 100, 2};
  std::vector<SampleMetrics> r;
  for (std::uint64_t v : q) r.push_back(report(0.08, 500, {{0.1, v}}));
  r.push_back(report(0.2, 500, {}));
  r.push_back(report(0.4, 500, {}));
  const auto s = aggregate(r);
  EXPECT_EQ(s.samples, 10u);
  EXPECT_NEAR(s.rows[0].asr, 0.8, 1e-15);
  EXPECT_NEAR(s.rows[0].mean_queries, 165.0 / 8.0, 1e-12);
  EXPECT_NEAR(s.rows[0].median_queries, 8.0, 1e-12); // (7 + 9) / 2
  EXPECT_THROW(aggregate(std::vector<SampleMetrics>{}), std::invalid_argument);
}

TEST(Aggregate, SerializesCsvAndJson) {
  const std::vector<SampleMetrics> r{report(0.07, 500, {{0.1, 12}}), report(0.3, 500, {})};
  const auto s = aggregate(r);
  std::ostringstream csv;
  s.write_csv(csv);
  std::istringstream lines(csv.str());
  std::string header, first;
  std::getline(lines, header);
  std::getline(lines, first);
  EXPECT_EQ(header, "threshold,asr,mean_queries,median_queries,mean_l2");
  EXPECT_EQ(first.rfind("0.1,0.5,12,12,", 0), 0u);
  std::ostringstream js;
  s.write_json(js);
  const auto j = nlohmann::json::parse(js.str());
  EXPECT_EQ(j["samples"], 2);
  EXPECT_TRUE(j["rows"][1]["mean_queries"].is_null());
}

TEST(Median, EvenAndOdd) {
  EXPECT_EQ(median({3, 1, 2}), 2.0);
  EXPECT_EQ(median({4, 1, 3, 2}), 2.5);
  EXPECT_TRUE(std::isnan(median({})));
}

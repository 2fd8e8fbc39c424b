#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "fba2d/harness.hpp"
#include "fba2d/image_io.hpp"

using namespace fba2d;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path &p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string &name) {
    path = fs::temp_directory_path() /
           ("fba2d_" + name + "_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
            "_" + std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

RunConfig small_run(const fs::path &manifest, const fs::path &out) {
  RunConfig cfg;
  cfg.dataset = manifest;
  cfg.out_dir = out;
  cfg.attack.max_queries = 60;
  cfg.seed = 5;
  return cfg;
}

} // namespace

TEST(Generator, OracleSeparatesClasses) {
  const auto data = synth_dataset(100, Shape{32, 32, 1}, 1);
  auto oracle = make_default_freq_energy_oracle(32, 32);
  std::size_t correct = 0;
  for (const auto &s : data) correct += oracle->query(s.image) == s.label;
  EXPECT_GE(static_cast<double>(correct) / static_cast<double>(data.size()), 0.95);
}

TEST(Generator, ImagesAreValidAndEightBit) {
  const auto data = synth_dataset(3, Shape{16, 24, 3}, 2);
  ASSERT_EQ(data.size(), 6u);
  for (const auto &s : data) {
    EXPECT_NO_THROW(validate_image(s.image));
    EXPECT_EQ(s.image, quantize8(s.image));
  }
  EXPECT_EQ(data[0].id, "real_0000");
  EXPECT_EQ(data[3].id, "fake_0000");
}

TEST(GenDataset, DeterministicFilesAndManifest) {
  TempDir a("gen_a"), b("gen_b");
  const auto ea = gen_dataset(a.path, 4, Shape{16, 16, 1}, 9);
  const auto eb = gen_dataset(b.path, 4, Shape{16, 16, 1}, 9);
  ASSERT_EQ(ea.size(), 8u);
  EXPECT_EQ(slurp(a.path / "manifest.json"), slurp(b.path / "manifest.json"));
  for (const auto &e : ea) EXPECT_EQ(slurp(a.path / e.path), slurp(b.path / e.path));
  const auto back = read_manifest(a.path / "manifest.json");
  ASSERT_EQ(back.size(), ea.size());
  EXPECT_EQ(back[0].path, ea[0].path);
  EXPECT_EQ(back[7].label, Label::Fake);
  const auto loaded = load_dataset(a.path / "manifest.json");
  const auto synth = synth_dataset(4, Shape{16, 16, 1}, 9);
  for (std::size_t i = 0; i < loaded.size(); ++i) {
    EXPECT_EQ(loaded[i].image, synth[i].image);
    EXPECT_EQ(loaded[i].id, synth[i].id);
  }
}

TEST(GenDataset, ZeroPerClassIsEmpty) {
  TempDir d("gen_zero");
  EXPECT_TRUE(gen_dataset(d.path, 0, Shape{8, 8, 1}, 1).empty());
  EXPECT_TRUE(read_manifest(d.path / "manifest.json").empty());
  EXPECT_EQ(nlohmann::json::parse(slurp(d.path / "manifest.json")), nlohmann::json::array());
}

TEST(TrainSurrogate, AccurateAndByteIdenticalOnRetrain) {
  TempDir d("train");
  gen_dataset(d.path / "data", 200, Shape{32, 32, 1}, 3);
  testing::internal::CaptureStdout();
  ASSERT_EQ(cmd_train_surrogate(d.path / "data/manifest.json", d.path / "a.fbas", 3), 0);
  ASSERT_EQ(cmd_train_surrogate(d.path / "data/manifest.json", d.path / "b.fbas", 3), 0);
  const std::string out = testing::internal::GetCapturedStdout();
  const double acc = std::stod(out.substr(out.find("train_accuracy=") + 15));
  EXPECT_GE(acc, 0.90);
  EXPECT_EQ(slurp(d.path / "a.fbas"), slurp(d.path / "b.fbas"));

  const auto model = load_surrogate(d.path / "a.fbas");
  std::size_t correct = 0;
  const auto samples = load_dataset(d.path / "data/manifest.json");
  for (const auto &s : samples) correct += model.predict(s.image) == s.label;
  EXPECT_GE(static_cast<double>(correct) / static_cast<double>(samples.size()), 0.90);
}

TEST(TrainSurrogate, SingleSampleDataset) {
  TempDir d("train_one");
  write_png(d.path / "x.png", ImageTensor(Shape{8, 8, 1}, 0.5));
  write_manifest(d.path / "manifest.json", {{"x.png", Label::Fake}});
  testing::internal::CaptureStdout();
  EXPECT_EQ(cmd_train_surrogate(d.path / "manifest.json", d.path / "s.fbas", 0), 0);
  testing::internal::GetCapturedStdout();
  EXPECT_TRUE(fs::exists(d.path / "s.fbas"));
}

TEST(RunConfig, ParsesAndRejectsUnknownKeys) {
  const auto j = nlohmann::json::parse(R"({
    "oracle": "freq-energy", "queries": 123, "seed": 4, "workers": 2,
    "thresholds": [0.2, 0.1], "use_soup": false,
    "soup": {"epsilon": 0.02, "step_size": 0.002},
    "mask_policy": {"real": {"low": 0.05, "high": 0.15}, "fake": {"low": 0.3}}
  })");
  const RunConfig c = parse_run_config(j);
  EXPECT_EQ(c.attack.max_queries, 123u);
  EXPECT_EQ(c.seed, 4u);
  EXPECT_EQ(c.workers, 2u);
  EXPECT_FALSE(c.use_soup);
  EXPECT_EQ(c.thresholds, (std::vector<double>{0.2, 0.1}));
  EXPECT_EQ(c.soup.epsilon, 0.02);
  EXPECT_EQ(c.mask_policy.real.high, 0.15);
  EXPECT_EQ(c.mask_policy.fake.low, 0.3);
  EXPECT_EQ(c.mask_policy.fake.high, 0.0);
  EXPECT_THROW(parse_run_config(nlohmann::json::parse(R"({"querys": 5})")),
               std::invalid_argument);
  EXPECT_THROW(parse_run_config(nlohmann::json::parse(R"({"soup": {"eps": 5}})")),
               std::invalid_argument);
}

TEST(RunConfig, DefaultMaskPolicy) {
  const MaskPolicy p;
  EXPECT_EQ(p.for_label(Label::Real, 32, 32), FrequencyMask::bands(32, 32, 0.1, 0.1));
  EXPECT_EQ(p.for_label(Label::Fake, 32, 32), FrequencyMask::bands(32, 32, 0.2, 0.0));
}

TEST(MakeOracle, BuiltinAndErrors) {
  RunConfig c;
  auto o = make_oracle(c, 16, 16);
  ASSERT_NE(dynamic_cast<FreqEnergyOracle *>(o.get()), nullptr);
  c.oracle = "nonsense";
  EXPECT_THROW(make_oracle(c, 16, 16), std::invalid_argument);
}

TEST(QueriesToRmse, FirstCrossing) {
  AttackTrace t;
  t.records = {{0, 1, 5, 0.3, 1.5}, {1, 9, 3, 0.09, 1.5}, {2, 20, 1, 0.04, 1.5}};
  EXPECT_EQ(queries_to_rmse(t, 0.1), 9u);
  EXPECT_EQ(queries_to_rmse(t, 0.05), 20u);
  EXPECT_FALSE(queries_to_rmse(t, 0.01));
}

TEST(CmdAttack, EmptyDatasetGivesEmptyReport) {
  TempDir d("attack_empty");
  gen_dataset(d.path / "data", 0, Shape{8, 8, 1}, 1);
  ASSERT_EQ(cmd_attack(small_run(d.path / "data/manifest.json", d.path / "out")), 0);
  EXPECT_EQ(nlohmann::json::parse(slurp(d.path / "out/report.json")), nlohmann::json::array());
  testing::internal::CaptureStdout();
  EXPECT_EQ(cmd_bench(d.path / "out", d.path / "out", false), 0);
  testing::internal::GetCapturedStdout();
}

TEST(CmdAttack, MissingInputsFail) {
  RunConfig c;
  EXPECT_EQ(cmd_attack(c), 1);
  c.dataset = "/nonexistent/manifest.json";
  EXPECT_THROW(cmd_attack(c), std::exception);
  testing::internal::CaptureStderr();
  EXPECT_EQ(cmd_bench("/nonexistent", "/tmp", false), 2);
  testing::internal::GetCapturedStderr();
}

TEST(CmdAttack, EndToEndArtifactsAndDeterminism) {
  TempDir d("attack");
  gen_dataset(d.path / "data", 4, Shape{16, 16, 1}, 2);
  RunConfig c1 = small_run(d.path / "data/manifest.json", d.path / "one");
  RunConfig c2 = small_run(d.path / "data/manifest.json", d.path / "two");
  c2.workers = 3;
  ASSERT_EQ(cmd_attack(c1), 0);
  ASSERT_EQ(cmd_attack(c2), 0);
  EXPECT_EQ(slurp(d.path / "one/report.json"), slurp(d.path / "two/report.json"));

  const auto report = nlohmann::json::parse(slurp(d.path / "one/report.json"));
  ASSERT_EQ(report.size(), 8u);
  std::vector<std::string> ids;
  for (const auto &row : report) {
    ids.push_back(row["id"]);
    EXPECT_LE(row["queries"].get<std::uint64_t>(), 60u);
    EXPECT_TRUE(fs::exists(d.path / "one/traces" / (row["id"].get<std::string>() + ".jsonl")));
    if (row["adversarial"].get<bool>())
      EXPECT_TRUE(fs::exists(d.path / "one/adv" / (row["id"].get<std::string>() + ".png")));
  }
  EXPECT_TRUE(std::is_sorted(ids.begin(), ids.end()));

  testing::internal::CaptureStdout();
  ASSERT_EQ(cmd_bench(d.path / "one", d.path / "b1", true), 0);
  ASSERT_EQ(cmd_bench(d.path / "one", d.path / "b2", true), 0);
  testing::internal::GetCapturedStdout();
  EXPECT_EQ(slurp(d.path / "b1/summary.csv"), slurp(d.path / "b2/summary.csv"));
  EXPECT_EQ(slurp(d.path / "b1/summary.json"), slurp(d.path / "b2/summary.json"));
  EXPECT_EQ(slurp(d.path / "b1/curves.csv"), slurp(d.path / "b2/curves.csv"));

  // Thresholds column is exactly the default triple.
  std::istringstream csv(slurp(d.path / "b1/summary.csv"));
  std::string line;
  std::getline(csv, line);
  std::vector<double> thresholds;
  while (std::getline(csv, line)) thresholds.push_back(std::stod(line.substr(0, line.find(','))));
  EXPECT_EQ(thresholds, (std::vector<double>{0.1, 0.05, 0.01}));

  // Bench is a thin layer over aggregate().
  std::vector<SampleMetrics> ms;
  for (const auto &row : report) ms.push_back(metrics_from_json(row));
  std::ostringstream direct;
  aggregate(ms).write_csv(direct);
  EXPECT_EQ(direct.str(), slurp(d.path / "b1/summary.csv"));
}

TEST(CmdAttack, LabelFilterAndTargetedOnly) {
  TempDir d("attack_filter");
  gen_dataset(d.path / "data", 3, Shape{16, 16, 1}, 4);
  RunConfig c = small_run(d.path / "data/manifest.json", d.path / "out");
  c.only_label = Label::Fake;
  c.use_soup = false;
  ASSERT_EQ(cmd_attack(c), 0);
  const auto report = nlohmann::json::parse(slurp(d.path / "out/report.json"));
  ASSERT_EQ(report.size(), 3u);
  for (const auto &row : report) {
    EXPECT_EQ(row["label"], 1);
    EXPECT_NE(row["init_mode"], "soup");
  }
}

TEST(Outcome, JsonRoundTrip) {
  SampleOutcome o;
  o.metrics.id = "fake_0001";
  o.metrics.rmse = 0.04;
  o.metrics.l2 = 1.28;
  o.metrics.queries = 77;
  o.metrics.adversarial = true;
  o.metrics.success_at = {{0.1, true}, {0.05, true}, {0.01, false}};
  o.metrics.queries_at = {{0.1, 3}, {0.05, 40}};
  o.label = Label::Fake;
  o.init_mode = InitMode::Soup;
  const auto back = metrics_from_json(nlohmann::json::parse(outcome_to_json(o).dump()));
  EXPECT_EQ(back.id, o.metrics.id);
  EXPECT_EQ(back.queries, 77u);
  EXPECT_EQ(back.success_at, o.metrics.success_at);
  EXPECT_EQ(back.queries_at, o.metrics.queries_at);
  EXPECT_TRUE(std::isinf(back.psnr));
}

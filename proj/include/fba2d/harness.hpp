#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "fba2d/metrics.hpp"
#include "fba2d/oracle.hpp"
#include "fba2d/soup.hpp"
#include "fba2d/triangle.hpp"

namespace fba2d {

// ---------------------------------------------------------------------------
// Synthetic data

/// Per-pixel standard deviations used by the generator.
struct GeneratorParams {
  double base_std = 0.08;     // smooth low-pass content, both classes
  double base_decay = 4.0;    // coefficient std ~ exp(-(i+j)/decay)
  double texture_std = 0.05;  // white texture added to real-like images only
  double mean_spread = 0.05;  // image mean ~ U(0.5 - spread, 0.5 + spread)
};

/// Low-pass noise around a random mean: what a "generated" image looks like here.
ImageTensor make_fake_like(Shape shape, std::mt19937_64 &rng, const GeneratorParams &p = {});
/// The same smooth content plus broadband texture.
ImageTensor make_real_like(Shape shape, std::mt19937_64 &rng, const GeneratorParams &p = {});

/// Independent stream for (seed, stream, index); used everywhere a per-item RNG is needed.
std::mt19937_64 derived_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t index);

struct ManifestEntry {
  std::string path; // relative to the manifest's directory
  Label label = Label::Real;
};

/// Writes n_per_class real-like then n_per_class fake-like PNGs plus manifest.json.
std::vector<ManifestEntry> gen_dataset(const std::filesystem::path &out_dir,
                                       std::size_t n_per_class, Shape shape, std::uint64_t seed,
                                       const GeneratorParams &params = {});

void write_manifest(const std::filesystem::path &path, const std::vector<ManifestEntry> &entries);
std::vector<ManifestEntry> read_manifest(const std::filesystem::path &path);

struct Sample {
  std::string id;
  ImageTensor image;
  Label label = Label::Real;
};

/// Loads every manifest entry; ids are the file stems.
std::vector<Sample> load_dataset(const std::filesystem::path &manifest_path);

/// In-memory equivalent of gen_dataset: the same 8-bit images, ids as file stems.
std::vector<Sample> synth_dataset(std::size_t n_per_class, Shape shape, std::uint64_t seed,
                                  const GeneratorParams &params = {});

// ---------------------------------------------------------------------------
// Run configuration

struct BandSpec {
  double low = 0.0;
  double high = 0.0;
};

/// Query subspace per benign label. Defaults: real -> 10%L + 10%H, fake -> 20%L.
struct MaskPolicy {
  BandSpec real{0.10, 0.10};
  BandSpec fake{0.20, 0.0};

  FrequencyMask for_label(Label y, std::size_t height, std::size_t width) const;
};

struct RunConfig {
  /// "freq-energy" for the builtin energy detector, or an http:// endpoint.
  std::string oracle = "freq-energy";
  double oracle_threshold = FreqEnergyDefaults::threshold;
  double oracle_high_fraction = FreqEnergyDefaults::high_fraction;
  std::optional<std::string> bearer_token;
  int http_timeout_ms = 5000;

  AttackConfig attack;      // mask is replaced per sample by the policy
  SoupConfig soup;
  bool use_soup = true;
  MaskPolicy mask_policy;
  std::size_t pool_size = 10;
  std::vector<double> thresholds = kDefaultThresholds;

  std::optional<std::filesystem::path> dataset;
  std::optional<std::filesystem::path> surrogate;
  std::filesystem::path out_dir = "fba2d_out";
  std::optional<Label> only_label; // attack only samples with this label
  std::uint64_t seed = 0;
  unsigned workers = 1;
};

/// Parses the JSON run config; unknown keys are rejected.
RunConfig parse_run_config(const nlohmann::json &j);
RunConfig load_run_config(const std::filesystem::path &path);

/// Builds the oracle named by cfg for images of the given plane size.
std::unique_ptr<Oracle> make_oracle(const RunConfig &cfg, std::size_t height, std::size_t width);

// ---------------------------------------------------------------------------
// Attack pipeline

struct SampleOutcome {
  SampleMetrics metrics;
  Label label = Label::Real;
  InitMode init_mode = InitMode::Failed;
  AttackTrace trace;
  std::optional<ImageTensor> adversarial;
  std::string error; // non-empty when the sample could not be attacked
};

/// Attacks every target: soup (when enabled and a surrogate is given), targeted
/// fallback from opposite-label pool images, then the boundary walk. Results
/// are sorted by sample id. Runs on cfg.workers threads.
std::vector<SampleOutcome> attack_samples(std::span<const Sample> targets,
                                          std::span<const Sample> pool_source, Oracle &oracle,
                                          const RunConfig &cfg, const SurrogateModel *surrogate);

/// First trace point at or below the rmse threshold, in queries.
std::optional<std::uint64_t> queries_to_rmse(const AttackTrace &trace, double threshold);

nlohmann::ordered_json outcome_to_json(const SampleOutcome &o);
SampleMetrics metrics_from_json(const nlohmann::json &j);

// ---------------------------------------------------------------------------
// Commands (exit codes: 0 ok, 1 usage/config, 2 I/O or runtime failure)

int cmd_gen_dataset(const std::filesystem::path &out_dir, std::size_t n_per_class, Shape shape,
                    std::uint64_t seed);
int cmd_train_surrogate(const std::filesystem::path &manifest, const std::filesystem::path &out,
                        std::uint64_t seed);
int cmd_attack(const RunConfig &cfg);
int cmd_bench(const std::filesystem::path &attack_dir, const std::filesystem::path &out_dir,
              bool curves);

/// Reads FBA2D_LOG (trace|debug|info|warn|error|off) and configures logging.
void init_logging();

} // namespace fba2d

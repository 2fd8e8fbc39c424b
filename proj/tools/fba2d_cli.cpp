// fba2d: dataset generation, surrogate training, attack runs and benchmarking.

#include <iostream>
#include <regex>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "fba2d/harness.hpp"

namespace {

fba2d::Shape parse_size(const std::string &s) {
  static const std::regex re(R"((\d+)x(\d+)(?:x(\d+))?)");
  std::smatch m;
  if (!std::regex_match(s, m, re))
    throw CLI::ValidationError("--size", "expected HxW or HxWxC, got " + s);
  fba2d::Shape shape{std::stoul(m[1]), std::stoul(m[2]), m[3].matched ? std::stoul(m[3]) : 1};
  fba2d::validate_shape(shape);
  return shape;
}

std::vector<double> parse_thresholds(const std::string &s) {
  std::vector<double> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');) out.push_back(std::stod(item));
  if (out.empty()) throw CLI::ValidationError("--rmse-thresholds", "empty list");
  return out;
}

} // namespace

int main(int argc, char **argv) {
  fba2d::init_logging();
  CLI::App app{"Frequency-domain decision-based attacks on real/fake image detectors"};
  app.require_subcommand(1);

  std::string config_path, oracle, thresholds;
  std::optional<std::uint64_t> seed, queries;
  app.add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "Random seed");
  app.add_option("--oracle", oracle, "freq-energy or http://host:port/path");
  app.add_option("--queries", queries, "Query budget per sample");
  app.add_option("--rmse-thresholds", thresholds, "Comma-separated RMSE thresholds");

  auto *gen = app.add_subcommand("gen-dataset", "Write a synthetic real/fake PNG dataset");
  std::string gen_out, size = "32x32x1";
  std::size_t n_per_class = 100;
  gen->add_option("--out", gen_out, "Output directory")->required();
  gen->add_option("--n-per-class", n_per_class, "Images per class");
  gen->add_option("--size", size, "HxW or HxWxC");

  auto *train = app.add_subcommand("train-surrogate", "Fit the logistic DCT surrogate");
  std::string train_dataset, train_out;
  train->add_option("--dataset", train_dataset, "manifest.json")->required();
  train->add_option("--out", train_out, "Output .fbas file")->required();

  auto *attack = app.add_subcommand("attack", "Attack every sample of a dataset");
  std::string attack_dataset, attack_out, surrogate, only_label;
  std::optional<unsigned> workers;
  bool no_soup = false;
  attack->add_option("--dataset", attack_dataset, "manifest.json");
  attack->add_option("--out", attack_out, "Output directory");
  attack->add_option("--surrogate", surrogate, "Surrogate .fbas file (trained in-line if absent)");
  attack->add_flag("--no-soup", no_soup, "Targeted initialization only");
  attack->add_option("--workers", workers, "Parallel samples");
  attack->add_option("--label", only_label, "Only attack samples with this label (real|fake)");

  auto *bench = app.add_subcommand("bench", "Summarize an attack output directory");
  std::string bench_in, bench_out;
  bool curves = false;
  bench->add_option("--input", bench_in, "Attack output directory")->required();
  bench->add_option("--out", bench_out, "Summary directory (defaults to --input)");
  bench->add_flag("--curves", curves, "Also export per-step delta-vs-query curves");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    fba2d::RunConfig cfg;
    if (!config_path.empty()) cfg = fba2d::load_run_config(config_path);
    if (seed) cfg.seed = *seed;
    if (!oracle.empty()) cfg.oracle = oracle;
    if (queries) cfg.attack.max_queries = *queries;
    if (!thresholds.empty()) cfg.thresholds = parse_thresholds(thresholds);

    if (*gen) return fba2d::cmd_gen_dataset(gen_out, n_per_class, parse_size(size), cfg.seed);
    if (*train) return fba2d::cmd_train_surrogate(train_dataset, train_out, cfg.seed);
    if (*attack) {
      if (!attack_dataset.empty()) cfg.dataset = attack_dataset;
      if (!attack_out.empty()) cfg.out_dir = attack_out;
      if (!surrogate.empty()) cfg.surrogate = surrogate;
      if (no_soup) cfg.use_soup = false;
      if (workers) cfg.workers = *workers;
      if (!only_label.empty())
        cfg.only_label = only_label == "real" ? fba2d::Label::Real : fba2d::Label::Fake;
      return fba2d::cmd_attack(cfg);
    }
    if (*bench) return fba2d::cmd_bench(bench_in, bench_out.empty() ? bench_in : bench_out, curves);
  } catch (const std::invalid_argument &e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}

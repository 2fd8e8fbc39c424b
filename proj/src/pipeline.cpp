#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <set>
#include <thread>

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "fba2d/harness.hpp"
#include "fba2d/http_oracle.hpp"
#include "fba2d/image_io.hpp"

namespace fba2d {

namespace {

constexpr std::uint64_t kAttackStream = 0x41545441ULL; // "ATTA"
constexpr std::uint64_t kPoolStream = 0x504f4f4cULL;   // "POOL"

std::string threshold_key(double t) { return fmt::format("{}", t); }

nlohmann::ordered_json number_or_null(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

double number_or(const nlohmann::json &j, double fallback) {
  return j.is_number() ? j.get<double>() : fallback;
}

Label parse_label(const std::string &s) {
  if (s == "real" || s == "0") return Label::Real;
  if (s == "fake" || s == "1") return Label::Fake;
  throw std::invalid_argument("unknown label '" + s + "' (expected real or fake)");
}

void reject_unknown(const nlohmann::json &j, const std::set<std::string> &known,
                    const std::string &where) {
  for (const auto &[k, v] : j.items())
    if (!known.contains(k)) throw std::invalid_argument("unknown config key '" + where + k + "'");
}

SampleOutcome attack_one(const Sample &s, std::size_t index, std::span<const Sample> pool_source,
                         Oracle &oracle, const RunConfig &cfg, const SurrogateModel *surrogate) {
  SampleOutcome o;
  o.label = s.label;
  o.metrics.id = s.id;

  AttackConfig ac = cfg.attack;
  ac.mask = cfg.mask_policy.for_label(s.label, s.image.height(), s.image.width());
  ac.seed = derived_rng(cfg.seed, kAttackStream, index)();

  std::optional<ImageTensor> soup;
  if (cfg.use_soup && surrogate != nullptr)
    soup = build_soup(*surrogate, s.image, s.label, cfg.soup).soup;

  std::vector<const Sample *> candidates;
  for (const auto &p : pool_source)
    if (p.label != s.label && p.id != s.id && p.image.shape() == s.image.shape())
      candidates.push_back(&p);
  auto rng = derived_rng(cfg.seed, kPoolStream, index);
  std::shuffle(candidates.begin(), candidates.end(), rng);
  std::vector<ImageTensor> pool;
  for (std::size_t k = 0; k < candidates.size() && k < cfg.pool_size; ++k)
    pool.push_back(candidates[k]->image);

  InitResult init = select_init(s.image, s.label, soup, pool, oracle, ac.quantize_queries);
  o.init_mode = init.mode;
  if (!init.init) {
    o.error = "initialization failed: no adversarial soup or pool image";
    o.metrics.queries = init.queries;
    o.metrics.rmse = o.metrics.l2 = o.metrics.psnr = o.metrics.ssim =
        std::numeric_limits<double>::quiet_NaN();
    for (double t : cfg.thresholds) o.metrics.success_at[t] = false;
    return o;
  }

  AttackResult res = run_attack(s.image, s.label, *init.init, oracle, ac,
                                RunOptions{.queries_spent = init.queries, .init_verified = true});
  o.metrics = measure(s.image, res.adversarial, true, res.queries, cfg.thresholds);
  o.metrics.id = s.id;
  for (double t : cfg.thresholds) {
    if (!o.metrics.success_at[t]) continue;
    if (auto q = queries_to_rmse(res.trace, t)) o.metrics.queries_at[t] = *q;
  }
  o.trace = std::move(res.trace);
  o.adversarial = std::move(res.adversarial);
  return o;
}

} // namespace

FrequencyMask MaskPolicy::for_label(Label y, std::size_t height, std::size_t width) const {
  const BandSpec &b = y == Label::Real ? real : fake;
  return FrequencyMask::bands(height, width, b.low, b.high);
}

RunConfig parse_run_config(const nlohmann::json &j) {
  if (!j.is_object()) throw std::invalid_argument("run config must be a JSON object");
  reject_unknown(j,
                 {"oracle", "oracle_threshold", "oracle_high_fraction", "bearer_token",
                  "http_timeout_ms", "queries", "iterations_per_subspace", "alpha_step",
                  "alpha_shrink", "alpha_bound", "beta_floor", "quantize_queries", "soup",
                  "use_soup", "mask_policy", "pool_size", "thresholds", "dataset", "surrogate",
                  "out_dir", "only_label", "seed", "workers"},
                 "");
  RunConfig c;
  auto get = [&](const char *key, auto &dst) {
    if (j.contains(key)) dst = j.at(key).get<std::remove_reference_t<decltype(dst)>>();
  };
  get("oracle", c.oracle);
  get("oracle_threshold", c.oracle_threshold);
  get("oracle_high_fraction", c.oracle_high_fraction);
  if (j.contains("bearer_token")) c.bearer_token = j.at("bearer_token").get<std::string>();
  get("http_timeout_ms", c.http_timeout_ms);
  get("queries", c.attack.max_queries);
  get("iterations_per_subspace", c.attack.iterations_per_subspace);
  get("alpha_step", c.attack.alpha_step);
  get("alpha_shrink", c.attack.alpha_shrink);
  get("alpha_bound", c.attack.alpha_bound);
  get("beta_floor", c.attack.beta_floor);
  get("quantize_queries", c.attack.quantize_queries);
  if (j.contains("soup")) {
    const auto &s = j.at("soup");
    reject_unknown(s,
                   {"momentum_decay", "epsilon", "step_size", "total_iterations",
                    "soup_iterations", "weights", "scaling_factor"},
                   "soup.");
    auto sget = [&](const char *key, auto &dst) {
      if (s.contains(key)) dst = s.at(key).get<std::remove_reference_t<decltype(dst)>>();
    };
    sget("momentum_decay", c.soup.momentum_decay);
    sget("epsilon", c.soup.epsilon);
    // Step size follows epsilon unless given explicitly.
    c.soup.step_size = c.soup.epsilon / 10.0;
    sget("step_size", c.soup.step_size);
    sget("total_iterations", c.soup.total_iterations);
    sget("soup_iterations", c.soup.soup_iterations);
    sget("weights", c.soup.weights);
    sget("scaling_factor", c.soup.scaling_factor);
  }
  get("use_soup", c.use_soup);
  if (j.contains("mask_policy")) {
    const auto &m = j.at("mask_policy");
    reject_unknown(m, {"real", "fake"}, "mask_policy.");
    for (auto [name, band] : {std::pair{"real", &c.mask_policy.real},
                              std::pair{"fake", &c.mask_policy.fake}}) {
      if (!m.contains(name)) continue;
      reject_unknown(m.at(name), {"low", "high"}, std::string("mask_policy.") + name + ".");
      band->low = m.at(name).value("low", 0.0);
      band->high = m.at(name).value("high", 0.0);
    }
  }
  get("pool_size", c.pool_size);
  get("thresholds", c.thresholds);
  if (j.contains("dataset")) c.dataset = j.at("dataset").get<std::string>();
  if (j.contains("surrogate")) c.surrogate = j.at("surrogate").get<std::string>();
  if (j.contains("out_dir")) c.out_dir = j.at("out_dir").get<std::string>();
  if (j.contains("only_label")) c.only_label = parse_label(j.at("only_label").get<std::string>());
  get("seed", c.seed);
  get("workers", c.workers);

  // Validate what can be validated without a dataset.
  for (const BandSpec &b : {c.mask_policy.real, c.mask_policy.fake})
    (void)FrequencyMask::bands(8, 8, b.low, b.high);
  c.soup.validate();
  if (c.workers == 0) throw std::invalid_argument("workers must be >= 1");
  return c;
}

RunConfig load_run_config(const std::filesystem::path &path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open config " + path.string());
  return parse_run_config(nlohmann::json::parse(is));
}

std::unique_ptr<Oracle> make_oracle(const RunConfig &cfg, std::size_t height, std::size_t width) {
  if (cfg.oracle == "freq-energy")
    return std::make_unique<FreqEnergyOracle>(
        FrequencyMask::bands(height, width, 0.0, cfg.oracle_high_fraction), cfg.oracle_threshold);
  if (cfg.oracle.rfind("http://", 0) == 0) {
    HttpOracleOptions opts;
    opts.timeout = std::chrono::milliseconds(cfg.http_timeout_ms);
    opts.bearer_token = cfg.bearer_token;
    return std::make_unique<HttpOracle>(cfg.oracle, opts);
  }
  throw std::invalid_argument("unknown oracle '" + cfg.oracle +
                              "' (expected freq-energy or an http:// endpoint)");
}

std::optional<std::uint64_t> queries_to_rmse(const AttackTrace &trace, double threshold) {
  for (const auto &r : trace.records)
    if (r.rmse <= threshold) return r.queries;
  return std::nullopt;
}

std::vector<SampleOutcome> attack_samples(std::span<const Sample> targets,
                                          std::span<const Sample> pool_source, Oracle &oracle,
                                          const RunConfig &cfg, const SurrogateModel *surrogate) {
  std::vector<SampleOutcome> out(targets.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < targets.size();) {
      try {
        out[i] = attack_one(targets[i], i, pool_source, oracle, cfg, surrogate);
        spdlog::debug("{}: init={} queries={} rmse={:.4f}", targets[i].id,
                      to_string(out[i].init_mode), out[i].metrics.queries, out[i].metrics.rmse);
      } catch (const std::exception &e) {
        spdlog::warn("{}: {}", targets[i].id, e.what());
        SampleOutcome &o = out[i];
        o = SampleOutcome{};
        o.label = targets[i].label;
        o.metrics.id = targets[i].id;
        o.metrics.rmse = o.metrics.l2 = o.metrics.psnr = o.metrics.ssim =
            std::numeric_limits<double>::quiet_NaN();
        for (double t : cfg.thresholds) o.metrics.success_at[t] = false;
        o.error = e.what();
      }
    }
  };
  const unsigned n = std::max(1u, std::min<unsigned>(cfg.workers, static_cast<unsigned>(targets.size())));
  {
    std::vector<std::jthread> pool;
    for (unsigned w = 1; w < n; ++w) pool.emplace_back(worker);
    worker();
  }
  std::sort(out.begin(), out.end(),
            [](const SampleOutcome &a, const SampleOutcome &b) { return a.metrics.id < b.metrics.id; });
  return out;
}

nlohmann::ordered_json outcome_to_json(const SampleOutcome &o) {
  nlohmann::ordered_json j;
  const SampleMetrics &m = o.metrics;
  j["id"] = m.id;
  j["label"] = static_cast<int>(o.label);
  j["init_mode"] = to_string(o.init_mode);
  j["queries"] = m.queries;
  j["adversarial"] = m.adversarial;
  j["rmse"] = number_or_null(m.rmse);
  j["l2"] = number_or_null(m.l2);
  // +inf PSNR (identical images) is written as the string "inf".
  j["psnr"] = std::isinf(m.psnr) ? nlohmann::ordered_json("inf") : number_or_null(m.psnr);
  j["ssim"] = number_or_null(m.ssim);
  nlohmann::ordered_json success = nlohmann::ordered_json::object();
  for (auto it = m.success_at.rbegin(); it != m.success_at.rend(); ++it)
    success[threshold_key(it->first)] = it->second;
  j["success_at"] = success;
  nlohmann::ordered_json qat = nlohmann::ordered_json::object();
  for (auto it = m.queries_at.rbegin(); it != m.queries_at.rend(); ++it)
    qat[threshold_key(it->first)] = it->second;
  j["queries_at"] = qat;
  j["error"] = o.error;
  return j;
}

SampleMetrics metrics_from_json(const nlohmann::json &j) {
  SampleMetrics m;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  m.id = j.at("id").get<std::string>();
  m.queries = j.at("queries").get<std::uint64_t>();
  m.adversarial = j.at("adversarial").get<bool>();
  m.rmse = number_or(j.at("rmse"), nan);
  m.l2 = number_or(j.at("l2"), nan);
  m.psnr = j.at("psnr").is_string() ? std::numeric_limits<double>::infinity()
                                    : number_or(j.at("psnr"), nan);
  m.ssim = number_or(j.at("ssim"), nan);
  for (const auto &[k, v] : j.at("success_at").items()) m.success_at[std::stod(k)] = v.get<bool>();
  for (const auto &[k, v] : j.at("queries_at").items())
    m.queries_at[std::stod(k)] = v.get<std::uint64_t>();
  return m;
}

int cmd_gen_dataset(const std::filesystem::path &out_dir, std::size_t n_per_class, Shape shape,
                    std::uint64_t seed) {
  const auto entries = gen_dataset(out_dir, n_per_class, shape, seed);
  spdlog::info("wrote {} images and manifest to {}", entries.size(), out_dir.string());
  return 0;
}

int cmd_train_surrogate(const std::filesystem::path &manifest, const std::filesystem::path &out,
                        std::uint64_t seed) {
  const auto samples = load_dataset(manifest);
  if (samples.empty()) {
    std::cerr << "error: dataset " << manifest << " is empty\n";
    return 2;
  }
  std::vector<std::pair<ImageTensor, Label>> data;
  for (const auto &s : samples) data.emplace_back(s.image, s.label);
  const TrainingReport r = train_surrogate(data, TrainingOptions{.seed = seed});
  std::cout << fmt::format("train_accuracy={:.4f} loss={:.6f}\n", r.train_accuracy, r.final_loss);
  if (r.train_accuracy < 0.6) {
    std::cerr << fmt::format("error: surrogate did not converge (accuracy {:.3f} < 0.60)\n",
                             r.train_accuracy);
    return 2;
  }
  if (out.has_parent_path()) std::filesystem::create_directories(out.parent_path());
  save_surrogate(out, r.model);
  return 0;
}

int cmd_attack(const RunConfig &cfg) {
  if (!cfg.dataset) {
    std::cerr << "error: no dataset manifest given\n";
    return 1;
  }
  const auto samples = load_dataset(*cfg.dataset);
  std::filesystem::create_directories(cfg.out_dir / "adv");
  std::filesystem::create_directories(cfg.out_dir / "traces");

  std::vector<Sample> targets;
  for (const auto &s : samples)
    if (!cfg.only_label || s.label == *cfg.only_label) targets.push_back(s);

  std::vector<SampleOutcome> outcomes;
  if (!targets.empty()) {
    const auto &first = targets.front().image;
    auto oracle = make_oracle(cfg, first.height(), first.width());
    std::optional<SurrogateModel> surrogate;
    if (cfg.use_soup) {
      if (cfg.surrogate) {
        surrogate = load_surrogate(*cfg.surrogate);
      } else {
        spdlog::info("no surrogate file given; training one on the dataset");
        std::vector<std::pair<ImageTensor, Label>> data;
        for (const auto &s : samples) data.emplace_back(s.image, s.label);
        surrogate = train_surrogate(data, TrainingOptions{.seed = cfg.seed}).model;
      }
    }
    outcomes = attack_samples(targets, samples, *oracle, cfg, surrogate ? &*surrogate : nullptr);
  }

  nlohmann::ordered_json report = nlohmann::ordered_json::array();
  std::size_t failures = 0;
  for (const auto &o : outcomes) {
    report.push_back(outcome_to_json(o));
    if (!o.error.empty()) ++failures;
    if (o.adversarial) write_png(cfg.out_dir / "adv" / (o.metrics.id + ".png"), *o.adversarial);
    std::ofstream tr(cfg.out_dir / "traces" / (o.metrics.id + ".jsonl"));
    o.trace.write_jsonl(tr);
  }
  std::ofstream os(cfg.out_dir / "report.json");
  if (!os) throw std::runtime_error("cannot write report in " + cfg.out_dir.string());
  os << report.dump(2) << '\n';
  spdlog::info("attacked {} samples ({} failed); report in {}", outcomes.size(), failures,
               cfg.out_dir.string());
  return 0;
}

int cmd_bench(const std::filesystem::path &attack_dir, const std::filesystem::path &out_dir,
              bool curves) {
  const auto report_path = attack_dir / "report.json";
  std::ifstream is(report_path);
  if (!is) {
    std::cerr << "error: missing " << report_path << '\n';
    return 2;
  }
  const auto report = nlohmann::json::parse(is);
  std::vector<SampleMetrics> metrics;
  for (const auto &row : report) metrics.push_back(metrics_from_json(row));

  std::filesystem::create_directories(out_dir);
  BenchmarkSummary summary;
  if (!metrics.empty()) summary = aggregate(metrics);
  {
    std::ofstream csv(out_dir / "summary.csv");
    summary.write_csv(csv);
    std::ofstream js(out_dir / "summary.json");
    summary.write_json(js);
  }
  if (curves) {
    std::ofstream cs(out_dir / "curves.csv");
    cs << "id,step,queries,delta_l2,rmse,alpha\n";
    for (const auto &m : metrics) {
      std::ifstream tr(attack_dir / "traces" / (m.id + ".jsonl"));
      if (!tr) continue;
      for (const auto &r : AttackTrace::read_jsonl(tr).records)
        cs << fmt::format("{},{},{},{},{},{}\n", m.id, r.step, r.queries, r.delta_l2, r.rmse,
                          r.alpha);
    }
  }
  summary.write_csv(std::cout);
  return 0;
}

void init_logging() {
  if (!spdlog::get("fba2d")) spdlog::set_default_logger(spdlog::stderr_color_mt("fba2d"));
  spdlog::set_level(spdlog::level::warn);
  if (const char *lvl = std::getenv("FBA2D_LOG")) spdlog::set_level(spdlog::level::from_str(lvl));
}

} // namespace fba2d

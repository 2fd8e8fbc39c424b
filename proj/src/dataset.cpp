#include <cmath>
#include <fstream>
#include <stdexcept>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "fba2d/harness.hpp"
#include "fba2d/image_io.hpp"
#include "fba2d/spectral.hpp"

namespace fba2d {

namespace {

constexpr std::uint64_t kRealStream = 0x5245414cULL; // "REAL"
constexpr std::uint64_t kFakeStream = 0x46414b45ULL; // "FAKE"

ImageTensor smooth_noise(Shape shape, std::mt19937_64 &rng, const GeneratorParams &p) {
  validate_shape(shape);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> mean_dist(0.5 - p.mean_spread, 0.5 + p.mean_spread);
  Spectrum spec(shape);
  const double plane = static_cast<double>(shape.plane());
  for (std::size_t c = 0; c < shape.channels; ++c) {
    double ac = 0.0;
    for (std::size_t i = 0; i < shape.height; ++i)
      for (std::size_t j = 0; j < shape.width; ++j) {
        if (i == 0 && j == 0) continue;
        const double v = normal(rng) * std::exp(-static_cast<double>(i + j) / p.base_decay);
        spec.at(c, i, j) = v;
        ac += v * v;
      }
    // Rescale so the per-pixel standard deviation is exactly base_std.
    const double scale = ac > 0.0 ? p.base_std * std::sqrt(plane / ac) : 0.0;
    for (std::size_t i = 0; i < shape.height; ++i)
      for (std::size_t j = 0; j < shape.width; ++j) spec.at(c, i, j) *= scale;
    spec.at(c, 0, 0) = mean_dist(rng) * std::sqrt(plane);
  }
  return idct2(spec);
}

} // namespace

std::mt19937_64 derived_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  auto lo = [](std::uint64_t v) { return static_cast<std::uint32_t>(v & 0xFFFFFFFFu); };
  auto hi = [](std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); };
  std::seed_seq seq{lo(seed), hi(seed), lo(stream), hi(stream), lo(index), hi(index)};
  return std::mt19937_64(seq);
}

ImageTensor make_fake_like(Shape shape, std::mt19937_64 &rng, const GeneratorParams &p) {
  return clamp01(smooth_noise(shape, rng, p));
}

ImageTensor make_real_like(Shape shape, std::mt19937_64 &rng, const GeneratorParams &p) {
  ImageTensor img = smooth_noise(shape, rng, p);
  std::normal_distribution<double> texture(0.0, p.texture_std);
  for (double &v : img.values()) v += texture(rng);
  return clamp01(std::move(img));
}

std::vector<Sample> synth_dataset(std::size_t n_per_class, Shape shape, std::uint64_t seed,
                                  const GeneratorParams &params) {
  std::vector<Sample> out;
  out.reserve(2 * n_per_class);
  for (std::size_t i = 0; i < n_per_class; ++i) {
    auto rng = derived_rng(seed, kRealStream, i);
    out.push_back({fmt::format("real_{:04d}", i), quantize8(make_real_like(shape, rng, params)),
                   Label::Real});
  }
  for (std::size_t i = 0; i < n_per_class; ++i) {
    auto rng = derived_rng(seed, kFakeStream, i);
    out.push_back({fmt::format("fake_{:04d}", i), quantize8(make_fake_like(shape, rng, params)),
                   Label::Fake});
  }
  return out;
}

std::vector<ManifestEntry> gen_dataset(const std::filesystem::path &out_dir,
                                       std::size_t n_per_class, Shape shape, std::uint64_t seed,
                                       const GeneratorParams &params) {
  std::filesystem::create_directories(out_dir);
  std::vector<ManifestEntry> entries;
  for (const Sample &s : synth_dataset(n_per_class, shape, seed, params)) {
    const std::string name = s.id + ".png";
    write_png(out_dir / name, s.image);
    entries.push_back({name, s.label});
  }
  write_manifest(out_dir / "manifest.json", entries);
  return entries;
}

void write_manifest(const std::filesystem::path &path, const std::vector<ManifestEntry> &entries) {
  nlohmann::ordered_json j = nlohmann::ordered_json::array();
  for (const auto &e : entries)
    j.push_back({{"path", e.path}, {"label", static_cast<int>(e.label)}});
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write manifest " + path.string());
  os << j.dump(2) << '\n';
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path &path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open manifest " + path.string());
  const auto j = nlohmann::json::parse(is);
  if (!j.is_array()) throw std::runtime_error("manifest must be a JSON array");
  std::vector<ManifestEntry> out;
  for (const auto &e : j) {
    const int label = e.at("label").get<int>();
    if (label != 0 && label != 1)
      throw std::runtime_error("manifest label must be 0 or 1, got " + std::to_string(label));
    out.push_back({e.at("path").get<std::string>(), static_cast<Label>(label)});
  }
  return out;
}

std::vector<Sample> load_dataset(const std::filesystem::path &manifest_path) {
  const auto base = manifest_path.parent_path();
  std::vector<Sample> out;
  for (const auto &e : read_manifest(manifest_path)) {
    const std::filesystem::path p = base / e.path;
    out.push_back({p.stem().string(), read_png(p), e.label});
  }
  return out;
}

} // namespace fba2d
